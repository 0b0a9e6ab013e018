#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace safelqr {

/// An LQ cost value that is either a finite nonnegative number or the
/// distinguished "infinite" value (the cost of an unstable closed loop).
/// Serialized as the literal string "inf" in result files so that CSV
/// consumers never have to parse a floating-point infinity.
class Cost {
  public:
    Cost() : value_(0.0), finite_(true) {}

    static Cost finite(double value) { return Cost(value, true); }
    static Cost infinite() { return Cost(0.0, false); }

    bool is_finite() const { return finite_; }

    /// Finite value, or +inf when infinite.
    double value() const;

    /// 17-significant-digit decimal, or "inf".
    std::string str() const;

    friend bool operator==(const Cost& a, const Cost& b) {
        return a.finite_ == b.finite_ && (!a.finite_ || a.value_ == b.value_);
    }

  private:
    Cost(double value, bool finite) : value_(value), finite_(finite) {}
    double value_;
    bool finite_;
};

/// The plant x' = Ax + Bu + w with w ~ N(0, W), started from x0 = 0.
/// Construction validates: consistent dimensions, W symmetric positive
/// semidefinite, and (A, B) controllable (rank of the controllability
/// block matrix via SVD with threshold 1e-8 * sigma_max).
class LinearPlant {
  public:
    LinearPlant(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd W);

    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::MatrixXd& B() const { return B_; }
    const Eigen::MatrixXd& W() const { return W_; }

    /// Square factor L with L * L^T = W, used to sample w = L z.
    const Eigen::MatrixXd& noise_factor() const { return noise_factor_; }

    int state_dim() const { return static_cast<int>(A_.rows()); }
    int input_dim() const { return static_cast<int>(B_.cols()); }

  private:
    Eigen::MatrixXd A_;
    Eigen::MatrixXd B_;
    Eigen::MatrixXd W_;
    Eigen::MatrixXd noise_factor_;
};

/// Stage-cost weights x'Qx + u'Ru. Both matrices must be symmetric
/// positive definite.
class LQWeights {
  public:
    LQWeights(Eigen::MatrixXd Q, Eigen::MatrixXd R);

    const Eigen::MatrixXd& Q() const { return Q_; }
    const Eigen::MatrixXd& R() const { return R_; }

    int state_dim() const { return static_cast<int>(Q_.rows()); }
    int input_dim() const { return static_cast<int>(R_.rows()); }

  private:
    Eigen::MatrixXd Q_;
    Eigen::MatrixXd R_;
};

/// Solution of the discrete-time algebraic Riccati equation together with
/// the optimal gain and optimal cost.
struct RiccatiSolution {
    Eigen::MatrixXd P;     ///< stabilizing solution, symmetric positive definite
    Eigen::MatrixXd K;     ///< optimal gain for u = K x
    double cost = 0.0;     ///< optimal LQ cost tr(W P)
    double residual = 0.0; ///< final relative Riccati residual
    long iterations = 0;
};

}  // namespace safelqr
