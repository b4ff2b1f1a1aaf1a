#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "iqt/error.hpp"

namespace iqt {

/// n x K matrix of atoms (columns).
struct Dictionary {
    Eigen::MatrixXd atoms;
    bool normalized = true;

    Dictionary() = default;
    explicit Dictionary(Eigen::MatrixXd a, bool is_normalized = true) : atoms(std::move(a)), normalized(is_normalized) {
        validate();
    }

    /// Rescales every non-zero column to unit L2 norm.
    static Dictionary normalize(Eigen::MatrixXd a) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            const double nrm = a.col(c).norm();
            if (nrm > 0.0) a.col(c) /= nrm;
        }
        return Dictionary(std::move(a), true);
    }

    Eigen::Index signal_dim() const { return atoms.rows(); }
    Eigen::Index atom_count() const { return atoms.cols(); }

    void validate() const {
        if (!atoms.allFinite()) throw ParameterError("dictionary contains NaN/Inf");
        if (normalized) {
            for (Eigen::Index c = 0; c < atoms.cols(); ++c) {
                if (std::abs(atoms.col(c).norm() - 1.0) > 1e-6) {
                    throw ParameterError("dictionary column " + std::to_string(c) + " is not unit norm");
                }
            }
        }
    }
};

/// Sparse coefficient vector over K atoms: strictly increasing indices,
/// no stored zeros.
struct SparseCode {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    std::size_t dim_k = 0;

    std::size_t nnz() const { return indices.size(); }
    bool empty() const { return indices.empty(); }

    Eigen::VectorXd dense() const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_k));
        for (std::size_t n = 0; n < indices.size(); ++n) out(indices[n]) = values[n];
        return out;
    }

    static SparseCode from_dense(const Eigen::VectorXd& a) {
        SparseCode c;
        c.dim_k = static_cast<std::size_t>(a.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a(i) != 0.0) {
                c.indices.push_back(static_cast<std::uint32_t>(i));
                c.values.push_back(a(i));
            }
        }
        return c;
    }

    /// D * alpha, touching only the support.
    Eigen::VectorXd decode(const Eigen::MatrixXd& atoms) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(atoms.rows());
        for (std::size_t n = 0; n < indices.size(); ++n) out.noalias() += values[n] * atoms.col(indices[n]);
        return out;
    }

    bool valid() const {
        if (indices.size() != values.size()) return false;
        for (std::size_t n = 0; n < indices.size(); ++n) {
            if (indices[n] >= dim_k || values[n] == 0.0) return false;
            if (n > 0 && indices[n] <= indices[n - 1]) return false;
        }
        return true;
    }
};

} // namespace iqt
