#pragma once

#include <array>

namespace ml2::detail {

// 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kGLx = {
    -0.96028985649753618, -0.79666647741362673, -0.52553240991632899, -0.18343464249564978,
    0.18343464249564978,  0.52553240991632899,  0.79666647741362673,  0.96028985649753618};
inline constexpr std::array<double, 8> kGLw = {
    0.10122853629037669, 0.22238103445337434, 0.31370664587788705, 0.36268378337836177,
    0.36268378337836177, 0.31370664587788705, 0.22238103445337434, 0.10122853629037669};

}  // namespace ml2::detail
