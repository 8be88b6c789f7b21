// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

// Prints a better OPENBLAS_CORETYPE when OpenBLAS does not recognise this CPU and falls back to
// its generic SSE3 kernels; prints nothing otherwise.

#include <cstdio>
#include <cstring>

extern "C" char *openblas_get_corename(void);

int main()
{
  if (std::strcmp(openblas_get_corename(), "Prescott") != 0)
  {
    return 0;
  }
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx512f"))
  {
    std::printf("SkylakeX");
  }
  else if (__builtin_cpu_supports("avx2"))
  {
    std::printf("Haswell");
  }
  return 0;
}
