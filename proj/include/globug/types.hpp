#ifndef GLOBUG_TYPES_HPP
#define GLOBUG_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>

namespace globug {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Per-file scores aligned with a project's source-file order.
using ScoreVector = Eigen::VectorXd;

using TermId = std::uint32_t;

}  // namespace globug

#endif  // GLOBUG_TYPES_HPP
