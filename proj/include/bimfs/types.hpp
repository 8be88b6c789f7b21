// Copyright The bimfs Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bimfs
{

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CMat3 = Eigen::Matrix3cd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Base of every error thrown by the library. `what()` carries the provenance.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error
{
public:
  using Error::Error;
};

// Target and source (or one of its periodic images) are closer than the kernel allows.
class CoincidentPointsError : public Error
{
public:
  CoincidentPointsError(const std::string &msg, int image_m = 0, int image_n = 0)
    : Error(msg), m(image_m), n(image_n)
  {
  }
  int m;
  int n;
};

class SolverError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

}  // namespace bimfs
