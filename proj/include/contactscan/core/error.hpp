#pragma once

#include <stdexcept>
#include <string>

namespace contactscan
{
/// Input that cannot be parsed or violates a documented precondition.
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class PipelineStage
{
  segmentation,
  pose_estimation,
  fusion,
};

inline const char* stage_name(PipelineStage stage)
{
  switch (stage)
  {
    case PipelineStage::segmentation:
      return "segmentation";
    case PipelineStage::pose_estimation:
      return "pose estimation";
    case PipelineStage::fusion:
      return "fusion";
  }
  return "unknown";
}

/// Failure of one stage of the reconstruction pipeline.
class PipelineError : public std::runtime_error
{
public:
  PipelineError(PipelineStage stage, const std::string& what)
      : std::runtime_error(std::string(stage_name(stage)) + ": " + what), stage_(stage)
  {
  }

  PipelineStage stage() const { return stage_; }

private:
  PipelineStage stage_;
};
}  // namespace contactscan
