#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>

namespace senti {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Derived>
std::span<double> flat(Eigen::PlainObjectBase<Derived>& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}

template <class Derived>
std::span<const double> flat(const Eigen::PlainObjectBase<Derived>& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}

// Rounds every entry to the nearest float, the precision artifacts are stored in.
template <class Derived>
void round_to_float(Eigen::PlainObjectBase<Derived>& m) {
    for (double& x : flat(m)) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace senti
