#include "plap/operator_energy.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "plap/kernels.hpp"

namespace plap {
namespace {

constexpr int kMaxDim = 6;
using Idx = std::array<int, kMaxDim>;

/// Cell-corner bookkeeping over the active axes of a grid, plus the
/// coefficients sampled at every node.
class CornerMesh {
 public:
  explicit CornerMesh(const ModelBundle& model) : grid_(model.grid) {
    const auto& act = grid_.active_axes();
    d_ = static_cast<int>(act.size());
    if (d_ > kMaxDim) throw std::invalid_argument("too many active axes");
    nc_ = 1 << d_;
    double vol = 1.0;
    for (int k = 0; k < d_; ++k) {
      axes_[k] = act[k];
      size_[k] = grid_.size(act[k]);
      stride_[k] = grid_.stride(act[k]);
      h_[k] = grid_.spacing(act[k]);
      vol *= h_[k];
    }
    w_corner_ = vol / nc_;
    eps_ = model.eps_reg;

    const auto& c = model.coefficients;
    const std::size_t N = grid_.num_points();
    const int m = grid_.m();
    x_.resize(N * static_cast<std::size_t>(m));
    weight_.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      for (int k = 0; k < m; ++k) x_[i * m + k] = grid_.coord(k, grid_.axis_index(i, k));
      weight_[i] = grid_.trapezoid_weight(i);
    }
    constant_coeffs_ = c.x_independent();
    if (constant_coeffs_) {
      const std::span<const double> x0 = x(0);
      alpha0_ = c.alpha_at(x0);
      p0_ = c.p_at(x0);
    } else {
      alpha_.resize(N);
      p_.resize(N);
      for (std::size_t i = 0; i < N; ++i) {
        alpha_[i] = c.alpha_at(x(i));
        p_[i] = c.p_at(x(i));
      }
    }
  }

  const Grid& grid() const { return grid_; }
  int d() const { return d_; }
  int corners() const { return nc_; }
  double w_corner() const { return w_corner_; }
  double eps() const { return eps_; }
  double h(int k) const { return h_[k]; }
  std::ptrdiff_t stride(int k) const { return stride_[k]; }
  double alpha(std::size_t i) const { return constant_coeffs_ ? alpha0_ : alpha_[i]; }
  double p(std::size_t i) const { return constant_coeffs_ ? p0_ : p_[i]; }
  double weight(std::size_t i) const { return weight_[i]; }
  std::span<const double> x(std::size_t i) const {
    const auto m = static_cast<std::size_t>(grid_.m());
    return {x_.data() + i * m, m};
  }

  void index(std::size_t i, Idx& idx) const {
    for (int k = 0; k < d_; ++k) idx[k] = grid_.axis_index(i, axes_[k]);
  }
  bool interior(const Idx& idx) const {
    for (int k = 0; k < d_; ++k)
      if (idx[k] == 0 || idx[k] == size_[k] - 1) return false;
    return true;
  }
  /// Node with index idx is corner b of an existing cell.
  bool corner_valid(const Idx& idx, int b) const {
    for (int k = 0; k < d_; ++k) {
      if ((b >> k) & 1) {
        if (idx[k] == 0) return false;
      } else if (idx[k] == size_[k] - 1) {
        return false;
      }
    }
    return true;
  }
  static double sign(int b, int k) { return ((b >> k) & 1) ? -1.0 : 1.0; }

  /// One-sided gradient at corner b of node i.
  void corner_gradient(std::span<const double> u, std::size_t i, int b, double* g) const {
    for (int k = 0; k < d_; ++k) {
      const double s = sign(b, k);
      const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) +
                                              (s > 0 ? stride_[k] : -stride_[k]));
      g[k] = s * (u[j] - u[i]) / h_[k];
    }
  }

  /// |g|_ε^{p-2}.
  double power(double g2, double p) const {
    if (p == 2.0) return 1.0;
    return std::pow(g2 + eps_ * eps_, 0.5 * (p - 2.0));
  }

  /// ((|g|² + ε²)^{p/2} - ε^p) / p.
  double density(double g2, double p) const {
    if (p == 2.0) return 0.5 * g2;
    if (eps_ == 0.0) return std::pow(g2, 0.5 * p) / p;
    const double e2 = eps_ * eps_;
    return std::pow(eps_, p) * std::expm1(0.5 * p * std::log1p(g2 / e2)) / p;
  }

 private:
  const Grid& grid_;
  int d_ = 0;
  int nc_ = 1;
  Idx axes_{}, size_{};
  std::array<std::ptrdiff_t, kMaxDim> stride_{};
  std::array<double, kMaxDim> h_{};
  double w_corner_ = 0.0;
  double eps_ = 0.0;
  bool constant_coeffs_ = true;
  double alpha0_ = 1.0, p0_ = 2.0;
  std::vector<double> alpha_, p_, x_, weight_;
};

void check_grid(const ScalarField& f, const ModelBundle& model, const char* name) {
  if (!f.grid().same_as(model.grid))
    throw std::invalid_argument(std::string(name) + " does not live on the model grid");
}

/// Dirichlet part of ∂E/∂u_i on interior nodes, zero elsewhere.
std::vector<double> dirichlet_gradient(const CornerMesh& mesh, std::span<const double> u) {
  const std::size_t N = mesh.grid().num_points();
  const int d = mesh.d(), nc = mesh.corners();
  std::vector<double> flux(N * static_cast<std::size_t>(nc * d), 0.0);

#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    Idx idx;
    mesh.index(i, idx);
    double g[kMaxDim];
    for (int b = 0; b < nc; ++b) {
      if (!mesh.corner_valid(idx, b)) continue;
      mesh.corner_gradient(u, i, b, g);
      double g2 = 0.0;
      for (int k = 0; k < d; ++k) g2 += g[k] * g[k];
      const double c = mesh.alpha(i) * mesh.power(g2, mesh.p(i));
      double* q = &flux[(i * nc + b) * d];
      for (int k = 0; k < d; ++k) q[k] = c * g[k];
    }
  }

  std::vector<double> grad(N, 0.0);
  const double w = mesh.w_corner();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    Idx idx;
    mesh.index(i, idx);
    if (!mesh.interior(idx)) continue;
    double acc = 0.0;
    for (int b = 0; b < nc; ++b) {
      for (int k = 0; k < d; ++k) {
        const double s = CornerMesh::sign(b, k);
        const auto j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) +
                                                (s > 0 ? mesh.stride(k) : -mesh.stride(k)));
        const int bj = b ^ (1 << k);
        acc -= (w / mesh.h(k)) * s * (flux[(i * nc + b) * d + k] + flux[(j * nc + bj) * d + k]);
      }
    }
    grad[i] = acc;
  }
  return grad;
}

/// c (I + t e eᵀ), built entrywise so that it is bitwise symmetric.
Eigen::MatrixXd b_matrix(double c, double t, const Eigen::Ref<const Eigen::VectorXd>& e) {
  const auto n = e.size();
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) B(i, j) = c * ((i == j ? 1.0 : 0.0) + t * (e[i] * e[j]));
  return B;
}

}  // namespace

Eigen::MatrixXd assemble_B(double alpha, double p, std::span<const double> eta) {
  const auto n = static_cast<Eigen::Index>(eta.size());
  Eigen::Map<const Eigen::VectorXd> e(eta.data(), n);
  const double e2 = e.squaredNorm();
  if (e2 == 0.0) {
    if (p == 2.0) return alpha * Eigen::MatrixXd::Identity(n, n);
    return Eigen::MatrixXd::Zero(n, n);
  }
  const double c = p == 2.0 ? alpha : alpha * std::pow(e2, 0.5 * (p - 2.0));
  return b_matrix(c, (p - 2.0) / e2, e);
}

Eigen::MatrixXd assemble_B(std::span<const double> x, std::span<const double> eta,
                           const Coefficients& coefficients) {
  return assemble_B(coefficients.alpha_at(x), coefficients.p_at(x), eta);
}

Eigen::MatrixXd assemble_B_regularized(double alpha, double p, std::span<const double> eta,
                                       double eps) {
  if (eps == 0.0) return assemble_B(alpha, p, eta);
  const auto n = static_cast<Eigen::Index>(eta.size());
  Eigen::Map<const Eigen::VectorXd> e(eta.data(), n);
  const double e2 = e.squaredNorm() + eps * eps;
  const double c = p == 2.0 ? alpha : alpha * std::pow(e2, 0.5 * (p - 2.0));
  return b_matrix(c, (p - 2.0) / e2, e);
}

void require_boundary_vanishing(const ScalarField& field, const char* name) {
  const Grid& g = field.grid();
  for (std::size_t i = 0; i < g.num_points(); ++i)
    if (g.on_boundary(i) && field[i] != 0.0)
      throw std::invalid_argument(std::string(name) + " must vanish on the grid boundary");
}

std::vector<std::uint8_t> interior_unknowns(const Grid& grid) {
  std::vector<std::uint8_t> mask(grid.num_points());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = grid.on_boundary(i) ? 0 : 1;
  return mask;
}

std::vector<double> energy_gradient(const ScalarField& u, const ModelBundle& model) {
  check_grid(u, model, "u");
  const CornerMesh mesh(model);
  std::vector<double> grad = dirichlet_gradient(mesh, u.values());
  const auto& f = model.nonlinearity.f;
  const std::size_t N = grad.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    if (model.grid.on_boundary(i)) continue;
    grad[i] -= mesh.weight(i) * f(mesh.x(i), u[i]);
  }
  return grad;
}

ScalarField residual(const ScalarField& u, const ModelBundle& model) {
  std::vector<double> grad = energy_gradient(u, model);
  const Grid& g = model.grid;
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!g.on_boundary(i)) grad[i] /= g.trapezoid_weight(i);
  return ScalarField(g, std::move(grad));
}

double weak_pairing(const ScalarField& u, const ScalarField& xi, const ModelBundle& model) {
  check_grid(xi, model, "xi");
  require_boundary_vanishing(xi, "xi");
  const std::vector<double> grad = energy_gradient(u, model);
  return kernels::dot(grad, xi.values());
}

double first_variation(const ScalarField& u, const ScalarField& phi, const ModelBundle& model) {
  return weak_pairing(u, phi, model);
}

EnergyReport energy(const ScalarField& u, const ModelBundle& model, const Region& region) {
  check_grid(u, model, "u");
  if (!region.grid().same_as(model.grid))
    throw std::invalid_argument("region does not live on the model grid");
  EnergyReport rep;
  rep.region = region.describe();
  if (region.empty()) {
    rep.empty_region = true;
    return rep;
  }
  const CornerMesh mesh(model);
  const std::size_t N = model.grid.num_points();
  const int d = mesh.d(), nc = mesh.corners();
  const auto mask = region.mask();
  const auto& F = model.nonlinearity.F;
  std::vector<double> dir(N, 0.0), pot(N, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    if (!mask[i]) continue;
    Idx idx;
    mesh.index(i, idx);
    double g[kMaxDim];
    double acc = 0.0;
    for (int b = 0; b < nc; ++b) {
      if (!mesh.corner_valid(idx, b)) continue;
      mesh.corner_gradient(u.values(), i, b, g);
      double g2 = 0.0;
      for (int k = 0; k < d; ++k) g2 += g[k] * g[k];
      acc += mesh.alpha(i) * mesh.density(g2, mesh.p(i));
    }
    dir[i] = mesh.w_corner() * acc;
    pot[i] = mesh.weight(i) * F(mesh.x(i), u[i]);
  }
  rep.dirichlet_part = kernels::sum(dir);
  rep.potential_part = -kernels::sum(pot);
  rep.total = rep.dirichlet_part + rep.potential_part;
  if (!std::isfinite(rep.total)) throw std::domain_error("energy is not finite");
  return rep;
}

EnergyReport energy(const ScalarField& u, const ModelBundle& model) {
  return energy(u, model, Region::whole(model.grid));
}

double second_variation(const ScalarField& u, const ScalarField& phi, const ModelBundle& model) {
  check_grid(u, model, "u");
  check_grid(phi, model, "phi");
  require_boundary_vanishing(phi, "phi");
  const CornerMesh mesh(model);
  const std::size_t N = model.grid.num_points();
  const int d = mesh.d(), nc = mesh.corners();
  const double eps2 = mesh.eps() * mesh.eps();
  const auto& f_u = model.nonlinearity.f_u;
  std::vector<double> part(N, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) {
    Idx idx;
    mesh.index(i, idx);
    double gu[kMaxDim], gp[kMaxDim];
    double acc = 0.0;
    const double p = mesh.p(i);
    for (int b = 0; b < nc; ++b) {
      if (!mesh.corner_valid(idx, b)) continue;
      mesh.corner_gradient(u.values(), i, b, gu);
      mesh.corner_gradient(phi.values(), i, b, gp);
      double g2 = 0.0, pp = 0.0, up = 0.0;
      for (int k = 0; k < d; ++k) {
        g2 += gu[k] * gu[k];
        pp += gp[k] * gp[k];
        up += gu[k] * gp[k];
      }
      const double c = mesh.alpha(i) * mesh.power(g2, p);
      const double ge2 = g2 + eps2;
      acc += c * (pp + (p == 2.0 || ge2 == 0.0 ? 0.0 : (p - 2.0) * up * up / ge2));
    }
    double v = mesh.w_corner() * acc;
    if (phi[i] != 0.0) v -= mesh.weight(i) * f_u(mesh.x(i), u[i]) * phi[i] * phi[i];
    part[i] = v;
  }
  return kernels::sum(part);
}

StencilMatrix hessian_matrix(const ScalarField& u, const ModelBundle& model) {
  check_grid(u, model, "u");
  const CornerMesh mesh(model);
  StencilMatrix A(model.grid, interior_unknowns(model.grid));
  const auto unknowns = A.unknowns();
  const std::size_t N = model.grid.num_points();
  const int d = mesh.d(), nc = mesh.corners();
  const double w = mesh.w_corner();
  const double eps2 = mesh.eps() * mesh.eps();
  const auto& f_u = model.nonlinearity.f_u;

#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < N; ++r) {
    if (!unknowns[r]) continue;
    double g[kMaxDim], a[kMaxDim], v[kMaxDim];
    int steps[kMaxDim];
    for (int b = 0; b < nc; ++b) {
      // Cell in which r is corner b; r is interior so every such cell exists.
      std::ptrdiff_t origin = static_cast<std::ptrdiff_t>(r);
      for (int k = 0; k < d; ++k)
        if ((b >> k) & 1) origin -= mesh.stride(k);
      for (int beta = 0; beta < nc; ++beta) {
        const int diffbits = beta ^ b;
        if (std::popcount(static_cast<unsigned>(diffbits)) > 1) continue;
        std::ptrdiff_t node = origin;
        for (int k = 0; k < d; ++k)
          if ((beta >> k) & 1) node += mesh.stride(k);
        const auto n = static_cast<std::size_t>(node);
        mesh.corner_gradient(u.values(), n, beta, g);
        double g2 = 0.0;
        for (int k = 0; k < d; ++k) g2 += g[k] * g[k];
        const double p = mesh.p(n);
        const double c = mesh.alpha(n) * mesh.power(g2, p);
        const double t = (p == 2.0 || g2 + eps2 == 0.0) ? 0.0 : (p - 2.0) / (g2 + eps2);
        // Column of the corner-gradient map belonging to r.
        for (int k = 0; k < d; ++k) a[k] = 0.0;
        if (diffbits == 0) {
          for (int k = 0; k < d; ++k) a[k] = -CornerMesh::sign(beta, k) / mesh.h(k);
        } else {
          const int k0 = std::countr_zero(static_cast<unsigned>(diffbits));
          a[k0] = CornerMesh::sign(beta, k0) / mesh.h(k0);
        }
        // v = B a.
        double ga = 0.0;
        for (int k = 0; k < d; ++k) ga += g[k] * a[k];
        for (int k = 0; k < d; ++k) v[k] = c * (a[k] + t * g[k] * ga);
        // Columns: the corner node and its d in-cell neighbours.
        for (int col = -1; col < d; ++col) {
          const int gamma = col < 0 ? beta : beta ^ (1 << col);
          double entry = 0.0;
          if (col < 0) {
            for (int k = 0; k < d; ++k) entry -= v[k] * CornerMesh::sign(beta, k) / mesh.h(k);
          } else {
            entry = v[col] * CornerMesh::sign(beta, col) / mesh.h(col);
          }
          std::ptrdiff_t cnode = origin;
          for (int k = 0; k < d; ++k) {
            steps[k] = ((gamma >> k) & 1) - ((b >> k) & 1);
            if ((gamma >> k) & 1) cnode += mesh.stride(k);
          }
          if (!unknowns[static_cast<std::size_t>(cnode)]) continue;
          A.at(r, A.offset_index(std::span<const int>(steps, static_cast<std::size_t>(d)))) +=
              w * entry;
        }
      }
    }
    A.at(r, A.center()) -= mesh.weight(r) * f_u(mesh.x(r), u[r]);
  }

  // Exact symmetry: each pair is averaged once, by the row that reaches it
  // through an offset code above the centre.
  const int nofs = static_cast<int>(A.num_offsets());
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < N; ++r) {
    if (!unknowns[r]) continue;
    for (int o = A.center() + 1; o < nofs; ++o) {
      const auto c = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r) + A.offset(o));
      if (!unknowns[c]) continue;
      const double avg = 0.5 * (A.value(r, o) + A.value(c, A.opposite(o)));
      A.at(r, o) = avg;
      A.at(c, A.opposite(o)) = avg;
    }
  }
  return A;
}

}  // namespace plap
