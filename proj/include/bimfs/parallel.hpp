// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bimfs
{

// Worker threads used by block assembly and batched field evaluation. 0 means one per core.
void set_thread_count(unsigned n);
unsigned thread_count();

// Calls fn(i) for i in [0, n), split into contiguous chunks. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn &&fn)
{
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      fn(i);
    }
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
  {
    pool.emplace_back([&, w] {
      const std::size_t begin = n * w / workers, end = n * (w + 1) / workers;
      try
      {
        for (std::size_t i = begin; i < end; ++i)
        {
          fn(i);
        }
      }
      catch (...)
      {
        std::lock_guard lock(error_mutex);
        if (!error)
        {
          error = std::current_exception();
        }
      }
    });
  }
  for (auto &t : pool)
  {
    t.join();
  }
  if (error)
  {
    std::rethrow_exception(error);
  }
}

}  // namespace bimfs
