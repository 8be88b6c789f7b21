// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bimfs/parallel.hpp"

#include <atomic>

namespace bimfs
{

namespace
{

std::atomic<unsigned> requested_threads{0};

}  // namespace

void set_thread_count(unsigned n)
{
  requested_threads = n;
}

unsigned thread_count()
{
  const unsigned n = requested_threads;
  if (n > 0)
  {
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace bimfs
