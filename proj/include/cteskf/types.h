#pragma once

#include <Eigen/Dense>

namespace cteskf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat15x12 = Eigen::Matrix<double, 15, 12>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat3x15 = Eigen::Matrix<double, 3, 15>;
using Mat15x3 = Eigen::Matrix<double, 15, 3>;

// Block offsets of the 15-dimensional error state [att, vel, pos, bg, ba].
inline constexpr int kAtt = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kBg = 9;
inline constexpr int kBa = 12;

}  // namespace cteskf
