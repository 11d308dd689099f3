#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace contactscan::util
{
/// Runs fn(i) for i in [begin, end) on up to `threads` workers. Work is split
/// into contiguous chunks; fn must only write to slots owned by index i so the
/// result does not depend on the thread count.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, unsigned threads, Fn&& fn)
{
  if (end <= begin)
  {
    return;
  }
  const std::size_t n = end - begin;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(threads == 0 ? 1 : threads, n));
  if (workers == 1)
  {
    for (std::size_t i = begin; i < end; ++i)
    {
      fn(i);
    }
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w)
  {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi)
    {
      break;
    }
    pool.emplace_back([&, lo, hi] {
      try
      {
        for (std::size_t i = lo; i < hi; ++i)
        {
          fn(i);
        }
      }
      catch (...)
      {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure)
        {
          failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool)
  {
    t.join();
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
}
}  // namespace contactscan::util
