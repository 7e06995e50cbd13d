#include "stekloff/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include <arpack/arpack.hpp>
#include <lapacke.h>
#undef I  // complex.h

#include "stekloff/sparse_lu.hpp"

namespace stekloff {

void EigenRequest::validate() const {
  if (nev < 1) throw EigenSolverError("nev must be at least 1");
  if (subspace_dim != 0 && subspace_dim <= nev) throw EigenSolverError("subspace dimension must exceed nev");
  if (!(tolerance > 0.0)) throw EigenSolverError("residual tolerance must be positive");
  if (max_iterations < 1) throw EigenSolverError("max_iterations must be positive");
  if (!std::isfinite(shift)) throw EigenSolverError("shift must be finite");
}

std::vector<Complex> EigenResult::values() const {
  std::vector<Complex> v;
  v.reserve(pairs.size());
  for (const auto& p : pairs) v.push_back(p.lambda);
  return v;
}

double pencil_residual(const BlockSystem& system, Complex lambda, const CVector& x) {
  const CVector r = system.A * x + lambda * (system.B * x);
  return r.norm() / x.norm();
}

namespace {

constexpr double kInfiniteCutoff = 1e-10;  // |ν| below this fraction of max|ν|
constexpr double kZeroModeCutoff = 1e-6;   // ‖u‖/‖x‖ below this marks a λ = 0 mode
constexpr double kImagWarning = 1e-6;

bool is_zero_mode(const BlockSystem& s, const CVector& x) {
  const double u = x.head(s.dofs.n_edge_dofs()).norm();
  return u <= kZeroModeCutoff * x.norm();
}

CVector random_start(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  CVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

bool b_is_zero(const SparseMatrix& b) {
  for (Index k = 0; k < b.nonZeros(); ++k)
    if (b.valuePtr()[k] != Complex(0.0)) return false;
  return true;
}

struct RitzSet {
  std::vector<Complex> nu;
  std::vector<CVector> vectors;
};

// The q-rows of B fix q = −B_qq⁻¹ B_qu u on every finite or infinite mode, while
// x = (0, 0, q) spans the semisimple λ = 0 eigenspace. Resetting q this way is the
// spectral projector that removes that eigenspace, so it commutes with the
// shift-invert operator and keeps the large λ = 0 cluster out of the Krylov space.
class ScalarProjector {
 public:
  explicit ScalarProjector(const BlockSystem& s) : ne_(s.dofs.n_edge_dofs()), nq_(s.dofs.n_scalar()) {
    if (nq_ == 0) return;
    b_qu_ = block(s.B, ne_, nq_, 0, ne_);
    try {
      lu_ = std::make_unique<SparseLu>(block(s.B, ne_, nq_, ne_, nq_));
    } catch (const FactorizationError&) {
      lu_.reset();  // no usable scalar block: run without deflation
    }
  }
  void apply(CVector& x) const {
    if (!lu_) return;
    x.tail(nq_) = -lu_->solve(CVector(b_qu_ * x.head(ne_)));
  }

 private:
  Index ne_, nq_;
  SparseMatrix b_qu_;
  std::unique_ptr<SparseLu> lu_;
};

// OP x = (A + σB)⁻¹ B x, optionally with known eigenpairs deflated. A and B are
// symmetric, so the left eigenvector of OP for a right eigenvector v is B v and
// OP − V diag(ν) (Vᵀ B V)⁻¹ Vᵀ B sends the known ν to zero, leaving the rest of
// the spectrum in place.
class ShiftInvertOperator {
 public:
  ShiftInvertOperator(const BlockSystem& s, const SparseLu& lu, const ScalarProjector& proj)
      : b_(s.B), lu_(lu), proj_(proj) {}

  void deflate(const std::vector<EigenPair>& pairs, double sigma) {
    const Index n = lu_.size(), k = static_cast<Index>(pairs.size());
    v_.resize(n, k);
    Eigen::VectorXcd nu(k);
    for (Index j = 0; j < k; ++j) {
      v_.col(j) = pairs[static_cast<std::size_t>(j)].x;
      nu[j] = 1.0 / (sigma - pairs[static_cast<std::size_t>(j)].lambda);
    }
    bv_t_ = (b_ * v_).transpose();
    const Eigen::MatrixXcd g = bv_t_ * v_;
    coef_ = nu.asDiagonal() * g.fullPivLu().inverse();
  }

  CVector operator()(const CVector& x) const {
    const CVector bx = b_ * x;
    CVector y = lu_.solve(bx);
    proj_.apply(y);
    if (v_.cols() > 0) y -= v_ * (coef_ * (bv_t_ * x));
    return y;
  }

  Index size() const { return lu_.size(); }

 private:
  const SparseMatrix& b_;
  const SparseLu& lu_;
  const ScalarProjector& proj_;
  Eigen::MatrixXcd v_, bv_t_, coef_;
};

RitzSet arnoldi(const ShiftInvertOperator& op, int nev, int ncv, int max_iterations, const CVector& start_in) {
  const a_int n = op.size();
  CVector start = op(start_in);
  if (start.norm() == 0.0) throw EigenSolverError("operator annihilates the start vector");
  start /= start.norm();

  std::vector<Complex> resid(start.data(), start.data() + n);
  std::vector<Complex> v(static_cast<std::size_t>(n) * static_cast<std::size_t>(ncv));
  std::vector<Complex> workd(3 * static_cast<std::size_t>(n));
  const a_int lworkl = 3 * ncv * ncv + 5 * ncv;
  std::vector<Complex> workl(static_cast<std::size_t>(lworkl));
  std::vector<double> rwork(static_cast<std::size_t>(ncv));
  std::array<a_int, 11> iparam{};
  std::array<a_int, 14> ipntr{};
  iparam[0] = 1;
  iparam[2] = max_iterations;
  iparam[6] = 1;
  const double tol = 1e-11;

  a_int ido = 0, info = 1;
  while (true) {
    arpack::naupd(ido, arpack::bmat::identity, n, arpack::which::largest_magnitude, nev, tol, resid.data(), ncv,
                  v.data(), n, iparam.data(), ipntr.data(), workd.data(), workl.data(), lworkl, rwork.data(),
                  info);
    if (ido != -1 && ido != 1) break;
    Eigen::Map<CVector> in(workd.data() + ipntr[0] - 1, n);
    Eigen::Map<CVector> out(workd.data() + ipntr[1] - 1, n);
    out = op(CVector(in));
  }
  if (info == 1) throw EigenSolverError(fmt::format("Arnoldi did not converge in {} restarts", max_iterations));
  if (info < 0) throw EigenSolverError(fmt::format("Arnoldi (znaupd) failed with info = {}", info));

  std::vector<a_int> select(static_cast<std::size_t>(ncv), 1);
  std::vector<Complex> d(static_cast<std::size_t>(nev) + 1);
  std::vector<Complex> z(static_cast<std::size_t>(n) * static_cast<std::size_t>(nev));
  std::vector<Complex> workev(2 * static_cast<std::size_t>(ncv));
  arpack::neupd(1, arpack::howmny::ritz_vectors, select.data(), d.data(), z.data(), n, Complex(0.0),
                workev.data(), arpack::bmat::identity, n, arpack::which::largest_magnitude, nev, tol, resid.data(),
                ncv, v.data(), n, iparam.data(), ipntr.data(), workd.data(), workl.data(), lworkl, rwork.data(),
                info);
  if (info != 0) throw EigenSolverError(fmt::format("Ritz extraction (zneupd) failed with info = {}", info));

  RitzSet out;
  const int nconv = iparam[4];
  for (int k = 0; k < nconv; ++k) {
    out.nu.push_back(d[static_cast<std::size_t>(k)]);
    out.vectors.emplace_back(Eigen::Map<CVector>(z.data() + static_cast<std::size_t>(k) * n, n));
  }
  return out;
}

struct Attempt {
  EigenResult result;
  double radius = 0.0;  // every eigenvalue with |λ − σ| < radius has been captured
};

Attempt run_arnoldi(const BlockSystem& s, const ShiftInvertOperator& op, double sigma, int nev, int ncv,
                    int max_iterations, const CVector& start, double nu_scale = 0.0) {
  RitzSet ritz = arnoldi(op, nev, ncv, max_iterations, start);
  Attempt at;
  at.result.shift = sigma;
  double max_nu = nu_scale;
  for (const auto& nu : ritz.nu) max_nu = std::max(max_nu, std::abs(nu));
  double min_kept_nu = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ritz.nu.size(); ++k) {
    const Complex nu = ritz.nu[k];
    if (std::abs(nu) <= kInfiniteCutoff * max_nu) {
      ++at.result.discarded_infinite;
      continue;
    }
    min_kept_nu = std::min(min_kept_nu, std::abs(nu));
    CVector x = ritz.vectors[k];
    if (is_zero_mode(s, x)) {
      ++at.result.discarded_zero;
      continue;
    }
    const Complex lambda = sigma - 1.0 / nu;
    x /= x.norm();
    at.result.pairs.push_back({lambda, x, pencil_residual(s, lambda, x)});
  }
  // an empty deflated run certifies everything down to the infinite cutoff
  at.radius = std::isfinite(min_kept_nu) ? 1.0 / min_kept_nu : std::numeric_limits<double>::infinity();
  return at;
}

CVector combine(const EigenResult& r) {
  CVector v = CVector::Zero(r.pairs.front().x.size());
  for (std::size_t k = 0; k < r.pairs.size(); ++k) v += r.pairs[k].x / static_cast<double>(k + 1);
  return v;
}

void sort_by_shift_distance(EigenResult& r) {
  std::stable_sort(r.pairs.begin(), r.pairs.end(), [&](const EigenPair& a, const EigenPair& b) {
    return std::abs(a.lambda - r.shift) < std::abs(b.lambda - r.shift);
  });
}

void finalize(EigenResult& r, double tol) {
  for (const auto& p : r.pairs) {
    if (!(p.residual <= tol))
      throw EigenSolverError(fmt::format("eigenpair λ = {:.6g}{:+.3g}i has residual {:.3g} above tolerance {:.3g}",
                                         p.lambda.real(), p.lambda.imag(), p.residual, tol));
    if (std::abs(p.lambda.imag()) > kImagWarning * std::abs(p.lambda))
      r.warnings.push_back(fmt::format("λ = {:.6g}{:+.3g}i has a significant imaginary part", p.lambda.real(),
                                       p.lambda.imag()));
  }
}

// Radius around σ that the wanted set must be certified to: the nev nearest
// eigenvalues for NearestShift, or the disc |λ| ≤ M (M the nev-th smallest
// magnitude), which lies inside |λ − σ| ≤ M + |σ|.
double target_radius(EigenResult& r, const EigenRequest& req, double sigma) {
  const auto k = static_cast<std::size_t>(req.nev) - 1;
  if (req.which == Which::NearestShift) {
    sort_by_shift_distance(r);
    return std::abs(r.pairs[k].lambda - sigma);
  }
  sort_by_magnitude(r);
  return std::abs(r.pairs[k].lambda) + std::abs(sigma);
}

EigenResult solve_at_shift(const BlockSystem& system, const SparseLu& lu, const ScalarProjector& proj, double sigma,
                           const EigenRequest& req) {
  const int n = static_cast<int>(system.A.rows());
  ShiftInvertOperator op(system, lu, proj);

  // Grow the Krylov request in steps, restarting from the previous Ritz
  // vectors, until the wanted set lies inside the converged disc.
  const int step = std::max(4, req.nev / 2);
  int nev_internal = std::min(req.nev + step, n - 2);
  CVector start = random_start(n, 0x5eed);
  EigenResult r;
  double nu_scale = 0.0;
  while (true) {
    const int ncv = std::min(std::max({req.subspace_dim, 2 * nev_internal + 1, 20}), n);
    if (nev_internal < 1 || ncv <= nev_internal + 1)
      throw EigenSolverError("pencil too small for Arnoldi; use dense_solve");
    Attempt at = run_arnoldi(system, op, sigma, nev_internal, ncv, req.max_iterations, start);
    r = std::move(at.result);
    for (const auto& p : r.pairs) nu_scale = std::max(nu_scale, 1.0 / std::abs(sigma - p.lambda));
    const bool can_grow = nev_internal < n - 2;
    if (static_cast<int>(r.pairs.size()) < req.nev) {
      if (!can_grow)
        throw EigenSolverError(r.pairs.empty() ? "all Ritz values were spurious"
                                               : "fewer finite eigenvalues than requested");
    } else if (target_radius(r, req, sigma) < at.radius * (1.0 - 1e-12)) {
      break;
    } else if (!can_grow) {
      r.warnings.push_back("subspace exhausted before the wanted set was certified");
      break;
    }
    if (!r.pairs.empty()) start = combine(r);
    nev_internal = std::min(nev_internal + step, n - 2);
  }

  // A single-vector Krylov space can miss copies of a repeated eigenvalue.
  // Deflate everything found and look again; anything new inside the target
  // disc joins the set.
  for (int pass = 0; pass < 8; ++pass) {
    const double radius = target_radius(r, req, sigma);
    const int free_dim = n - static_cast<int>(r.pairs.size());
    const int nev_check = std::min(2, free_dim - 2);
    const int ncv_check = std::min(20, free_dim);
    if (nev_check < 1 || ncv_check <= nev_check + 1) break;
    op.deflate(r.pairs, sigma);
    Attempt chk = run_arnoldi(system, op, sigma, nev_check, ncv_check, req.max_iterations,
                              random_start(n, 0xc0ffee + static_cast<std::uint64_t>(pass)), nu_scale);
    bool added = false;
    for (auto& p : chk.result.pairs)
      if (std::abs(p.lambda - sigma) < radius * (1.0 + 1e-9)) {
        r.pairs.push_back(std::move(p));
        added = true;
      }
    if (!added) break;
    r.warnings.push_back("deflated pass recovered eigenvalue(s) missed by the first Krylov run");
  }

  target_radius(r, req, sigma);  // final ordering
  r.pairs.resize(static_cast<std::size_t>(req.nev));
  r.shift = sigma;
  finalize(r, req.tolerance);
  return r;
}

}  // namespace

void sort_by_magnitude(EigenResult& result) {
  std::stable_sort(result.pairs.begin(), result.pairs.end(), [](const EigenPair& a, const EigenPair& b) {
    const double ma = std::abs(a.lambda.real()), mb = std::abs(b.lambda.real());
    if (ma != mb) return ma < mb;
    return a.lambda.imag() < b.lambda.imag();
  });
}

EigenResult shift_invert_solve(const BlockSystem& system, const EigenRequest& req) {
  req.validate();
  const Index n = system.A.rows();
  if (system.B.rows() != n || system.A.cols() != n || system.B.cols() != n)
    throw EigenSolverError("pencil matrices have mismatched sizes");
  if (b_is_zero(system.B)) throw EigenSolverError("B is identically zero: the pencil has no finite eigenvalues");

  std::vector<double> shifts{req.shift};
  if (req.retry_shifts)
    for (double s : {-2.0, -1.5, -3.0, -0.5})
      if (s != req.shift) shifts.push_back(s);

  const ScalarProjector proj(system);
  std::string last_error;
  for (double sigma : shifts) {
    std::unique_ptr<SparseLu> lu;
    try {
      lu = std::make_unique<SparseLu>(SparseMatrix(system.A + sigma * system.B));
    } catch (const FactorizationError& e) {
      last_error = fmt::format("σ = {}: {}", sigma, e.what());
      continue;
    }
    EigenResult r = solve_at_shift(system, *lu, proj, sigma, req);
    if (sigma != req.shift)
      r.warnings.insert(r.warnings.begin(),
                        fmt::format("factorization at σ = {} failed; used σ = {}", req.shift, sigma));
    return r;
  }
  throw EigenSolverError("factorization of A + σB failed for every shift (" + last_error + ")");
}

EigenResult dense_solve(const BlockSystem& system, Index dimension_cap, double tolerance) {
  const Index n = system.A.rows();
  if (n > dimension_cap)
    throw EigenSolverError(fmt::format("pencil dimension {} exceeds the dense cap {}", n, dimension_cap));
  if (b_is_zero(system.B)) throw EigenSolverError("B is identically zero: the pencil has no finite eigenvalues");

  Eigen::MatrixXcd a = Eigen::MatrixXcd(system.A);
  Eigen::MatrixXcd b = -Eigen::MatrixXcd(system.B);
  std::vector<Complex> alpha(static_cast<std::size_t>(n)), beta(static_cast<std::size_t>(n));
  Eigen::MatrixXcd vr(n, n);
  const lapack_int info = LAPACKE_zggev(
      LAPACK_COL_MAJOR, 'N', 'V', n, reinterpret_cast<lapack_complex_double*>(a.data()), n,
      reinterpret_cast<lapack_complex_double*>(b.data()), n, reinterpret_cast<lapack_complex_double*>(alpha.data()),
      reinterpret_cast<lapack_complex_double*>(beta.data()), nullptr, 1,
      reinterpret_cast<lapack_complex_double*>(vr.data()), n);
  if (info != 0) throw EigenSolverError(fmt::format("QZ (zggev) failed with info = {}", info));

  EigenResult r;
  r.shift = 0.0;
  for (Index k = 0; k < n; ++k) {
    const Complex al = alpha[static_cast<std::size_t>(k)], be = beta[static_cast<std::size_t>(k)];
    if (std::abs(be) <= 1e-10 * std::abs(al) || be == Complex(0.0)) {
      ++r.discarded_infinite;
      continue;
    }
    CVector x = vr.col(k);
    if (is_zero_mode(system, x)) {
      ++r.discarded_zero;
      continue;
    }
    x /= x.norm();
    const Complex lambda = al / be;
    r.pairs.push_back({lambda, x, pencil_residual(system, lambda, x)});
  }
  if (r.pairs.empty()) throw EigenSolverError("no finite eigenvalues");
  sort_by_magnitude(r);
  finalize(r, tolerance);
  return r;
}

std::vector<std::vector<Complex>> cluster_eigenvalues(const std::vector<Complex>& values,
                                                      const ClusterPolicy& policy) {
  std::vector<std::vector<Complex>> out;
  if (values.empty()) return out;
  if (!policy.sizes.empty()) {
    const long total = std::accumulate(policy.sizes.begin(), policy.sizes.end(), 0L);
    if (total != static_cast<long>(values.size()))
      throw EigenSolverError(fmt::format("cluster sizes sum to {} but {} eigenvalues were given", total, values.size()));
    std::size_t pos = 0;
    for (int sz : policy.sizes) {
      if (sz < 1) throw EigenSolverError("cluster sizes must be positive");
      out.emplace_back(values.begin() + static_cast<long>(pos), values.begin() + static_cast<long>(pos + sz));
      pos += static_cast<std::size_t>(sz);
    }
    return out;
  }
  if (!(policy.gap > 0.0)) throw EigenSolverError("cluster gap must be positive");
  out.push_back({values.front()});
  for (std::size_t k = 1; k < values.size(); ++k) {
    const Complex prev = values[k - 1];
    if (std::abs(values[k] - prev) > policy.gap * std::abs(prev)) out.emplace_back();
    out.back().push_back(values[k]);
  }
  return out;
}

}  // namespace stekloff
