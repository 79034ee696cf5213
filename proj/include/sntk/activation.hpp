#pragma once

#include <Eigen/Dense>

namespace sntk {

enum class Activation { identity, relu };

inline double apply_activation(Activation act, double x) {
    return act == Activation::relu ? (x > 0.0 ? x : 0.0) : x;
}

// ReLU derivative at exactly zero is fixed to 0 for determinism.
inline double activation_derivative(Activation act, double x) {
    return act == Activation::relu ? (x > 0.0 ? 1.0 : 0.0) : 1.0;
}

inline Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& m) {
    if (act == Activation::identity) return m;
    return m.cwiseMax(0.0);
}

inline Eigen::MatrixXd activation_derivative(Activation act, const Eigen::MatrixXd& m) {
    if (act == Activation::identity) return Eigen::MatrixXd::Ones(m.rows(), m.cols());
    return (m.array() > 0.0).cast<double>().matrix();
}

} // namespace sntk
