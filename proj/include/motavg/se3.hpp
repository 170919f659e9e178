// Rigid-motion (SE3) arithmetic: composition, inversion, exponential and
// logarithm maps, Frobenius residuals, and the Gaussian correntropy kernel.
//
// Conventions:
//   - A Motion is (R, t) rendered as the usual 4x4 homogeneous matrix.
//   - A Twist packs rotation first: [omega; u] as a 6-vector.
//   - exp/log use Rodrigues plus the left Jacobian V(theta), with Taylor
//     branches below theta = 1e-6.

#ifndef MOTAVG_SE3_HPP
#define MOTAVG_SE3_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "motavg/errors.hpp"

namespace motavg {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline constexpr double kAngleGuard = 1e-6;   // guard band below pi for log
inline constexpr double kSigmaFloor = 1e-12;  // kernel width clamp
inline constexpr double kSmallAngle = 1e-4;   // Taylor-branch threshold

/// Rigid transformation: rotation r and translation t.
struct Motion {
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static Motion identity() { return Motion{}; }

  static Motion from_matrix(const Mat4& m) {
    Motion out;
    out.r = m.topLeftCorner<3, 3>();
    out.t = m.topRightCorner<3, 1>();
    return out;
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = r;
    m.topRightCorner<3, 1>() = t;
    return m;
  }
};

/// se(3) element: rotational part omega (radians), translational part u.
struct Twist {
  Vec3 omega = Vec3::Zero();
  Vec3 u = Vec3::Zero();

  Vec6 vector() const {
    Vec6 v;
    v << omega, u;
    return v;
  }

  static Twist from_vector(const Vec6& v) {
    Twist x;
    x.omega = v.head<3>();
    x.u = v.tail<3>();
    return x;
  }
};

/// Positive Gaussian kernel width, clamped at kSigmaFloor.
class KernelWidth {
 public:
  explicit KernelWidth(double sigma)
      : sigma_(sigma < kSigmaFloor ? kSigmaFloor : sigma) {}

  double value() const { return sigma_; }

 private:
  double sigma_;
};

struct ValidationResult {
  bool ok = true;
  std::string failure;  // empty when ok
};

inline ValidationResult validate_motion(const Motion& m, double tol = 1e-9) {
  if (!m.r.allFinite() || !m.t.allFinite()) {
    return {false, "non-finite entry"};
  }
  const double ortho = (m.r.transpose() * m.r - Mat3::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > tol) {
    return {false, "orthonormality violated (max deviation " +
                       std::to_string(ortho) + ")"};
  }
  if (std::abs(m.r.determinant() - 1.0) > tol) {
    return {false, "determinant not +1"};
  }
  return {};
}

inline Motion compose(const Motion& a, const Motion& b) {
  Motion out;
  out.r = a.r * b.r;
  out.t = a.r * b.t + a.t;
  return out;
}

inline Motion inverse(const Motion& m) {
  Motion out;
  out.r = m.r.transpose();
  out.t = -(out.r * m.t);
  return out;
}

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

namespace detail {

// Rotation exponential (Rodrigues) with Taylor branch near zero.
inline Mat3 rot_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  double a, b;  // R = I + a*W + b*W^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    const double t4 = t2 * t2;
    a = 1.0 - t2 / 6.0 + t4 / 120.0;
    b = 0.5 - t2 / 24.0 + t4 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    // (1 - cos theta)/theta^2 via the half-angle identity; the direct form
    // cancels catastrophically for small theta.
    const double s = std::sin(theta / 2.0) / theta;
    b = 2.0 * s * s;
  }
  return Mat3::Identity() + a * w + b * (w * w);
}

// Left Jacobian V(theta): t = V * u for the translation block of exp.
inline Mat3 left_jacobian(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  double b, c;  // V = I + b*W + c*W^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    const double t4 = t2 * t2;
    b = 0.5 - t2 / 24.0 + t4 / 720.0;
    c = 1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0;
  } else {
    const double s = std::sin(theta / 2.0) / theta;
    b = 2.0 * s * s;
    c = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Mat3::Identity() + b * w + c * (w * w);
}

inline Mat3 left_jacobian_inverse(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  double c;  // V^-1 = I - W/2 + c*W^2
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    const double t4 = t2 * t2;
    c = 1.0 / 12.0 + t2 / 720.0 + t4 / 30240.0;
  } else {
    c = 1.0 / (theta * theta) -
        (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Mat3::Identity() - 0.5 * w + c * (w * w);
}

// Rotation logarithm; rejects angles within kAngleGuard of pi.
inline Vec3 rot_log(const Mat3& r) {
  const double cos_theta =
      std::min(1.0, std::max(-1.0, (r.trace() - 1.0) / 2.0));
  const double theta = std::acos(cos_theta);
  if (theta >= M_PI - kAngleGuard) {
    throw AngleNearPiError("rotation angle " + std::to_string(theta) +
                           " within guard band of pi; logarithm rejected");
  }
  Vec3 axis_part;
  axis_part << r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1);
  if (theta < kSmallAngle) {
    // theta/(2 sin theta) -> 1/2 + theta^2/12 + 7 theta^4/720
    const double t2 = theta * theta;
    return (0.5 + t2 / 12.0 + 7.0 * t2 * t2 / 720.0) * axis_part;
  }
  return (theta / (2.0 * std::sin(theta))) * axis_part;
}

}  // namespace detail

inline Motion exp_twist(const Twist& x) {
  Motion out;
  out.r = detail::rot_exp(x.omega);
  out.t = detail::left_jacobian(x.omega) * x.u;
  return out;
}

inline Twist log_motion(const Motion& m) {
  Twist x;
  x.omega = detail::rot_log(m.r);
  x.u = detail::left_jacobian_inverse(x.omega) * m.t;
  return x;
}

/// || rel - mi^-1 * mj ||_F over the full 4x4 homogeneous matrices.
inline double frobenius_residual(const Motion& rel, const Motion& mi,
                                 const Motion& mj) {
  const Motion predicted = compose(inverse(mi), mj);
  return (rel.matrix() - predicted.matrix()).norm();
}

/// Gaussian kernel G_sigma(e) = exp(-e^2 / (2 sigma^2)), in (0, 1].
inline double gaussian_kernel(double e, const KernelWidth& sigma) {
  const double s = sigma.value();
  return std::exp(-(e * e) / (2.0 * s * s));
}

/// Correntropy loss: sum of sigma^2 * (1 - G_sigma(e_h)); each term <= sigma^2.
inline double correntropy_loss(const std::vector<double>& residuals,
                               const KernelWidth& sigma) {
  const double s2 = sigma.value() * sigma.value();
  double loss = 0.0;
  for (double e : residuals) {
    loss += s2 * (1.0 - gaussian_kernel(e, sigma));
  }
  return loss;
}

}  // namespace motavg

#endif  // MOTAVG_SE3_HPP
