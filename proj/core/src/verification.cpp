#include "swarmraft/verification.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "swarmraft/error.hpp"

namespace swarmraft {

std::string_view to_string(FallbackPolicy p) {
  return p == FallbackPolicy::ins_only ? "ins_only" : "all_peers";
}

std::string_view to_string(InitPolicy p) { return p == InitPolicy::reported ? "reported" : "centroid"; }

FallbackPolicy parse_fallback_policy(std::string_view text) {
  if (text == "ins_only") return FallbackPolicy::ins_only;
  if (text == "all_peers") return FallbackPolicy::all_peers;
  throw Error("unknown fallback policy '" + std::string(text) + "'");
}

InitPolicy parse_init_policy(std::string_view text) {
  if (text == "reported") return InitPolicy::reported;
  if (text == "centroid") return InitPolicy::centroid;
  throw Error("unknown init policy '" + std::string(text) + "'");
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::accepted_report: return "accepted_report";
    case Provenance::multilaterated: return "multilaterated";
    case Provenance::ins_fallback: return "ins_fallback";
  }
  return "accepted_report";
}

Provenance parse_provenance(std::string_view text) {
  for (auto p : {Provenance::accepted_report, Provenance::multilaterated, Provenance::ins_fallback}) {
    if (to_string(p) == text) return p;
  }
  throw Error("unknown provenance '" + std::string(text) + "'");
}

void DetectionParams::validate() const {
  if (!(tau > 0.0)) throw Error("detection.tau must be positive");
  if (!(epsilon > 0.0)) throw Error("detection.epsilon must be positive");
  if (k_max < 1) throw Error("detection.k_max must be at least 1");
  if (!(step_tol > 0.0)) throw Error("detection.step_tol must be positive");
  if (!(residual_threshold_T >= 0.0)) throw Error("detection.residual_threshold must be nonnegative");
}

double soft_l1(double squared_residual) { return 2.0 * (std::sqrt(1.0 + squared_residual) - 1.0); }

double multilateration_objective(std::span<const Anchor> anchors, const Position& q) {
  double total = 0.0;
  for (const auto& a : anchors) {
    const double r = euclidean_distance(q, a.position) - a.meters;
    total += soft_l1(r * r);
  }
  return total;
}

std::vector<VoteTally> compute_votes(std::span<const ClientReport> reports, const RangeMatrix& ranges,
                                     double tau, OpCounter* ops) {
  const std::size_t n = reports.size();
  if (n < 2) throw Error("compute_votes needs at least two reports");
  if (ranges.size() != n) throw Error("range matrix dimension does not match report count");
  std::vector<VoteTally> tallies(n);
  for (std::size_t a = 0; a < n; ++a) {
    int v = 0;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      const double reported =
          euclidean_distance(reports[a].reported_position, reports[b].reported_position);
      v += std::abs(reported - ranges.at(a, b)) < tau ? 1 : -1;
    }
    tallies[a] = VoteTally{reports[a].node_id, v, v < 0};
  }
  if (ops) ops->distance_evaluations += n * (n - 1);
  return tallies;
}

double residual(const ClientReport& report, std::span<const Anchor> verified_peers) {
  if (verified_peers.empty()) throw Error("residual needs at least one peer");
  double ss = 0.0;
  for (const auto& p : verified_peers) {
    const double r = euclidean_distance(report.reported_position, p.position) - p.meters;
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(verified_peers.size()));
}

namespace {

Eigen::Vector3d to_eigen(const Position& p) { return {p.x, p.y, p.z}; }
Position to_position(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

// Affine rank of the anchor cloud: 0 coincident, 1 collinear, 2 planar, 3 full.
int affine_rank(std::span<const Anchor> anchors) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& a : anchors) mean += to_eigen(a.position);
  mean /= static_cast<double>(anchors.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  double scale = 0.0;
  for (const auto& a : anchors) {
    const Eigen::Vector3d d = to_eigen(a.position) - mean;
    scatter += d * d.transpose();
    scale = std::max(scale, d.squaredNorm());
  }
  if (scale == 0.0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const double top = eig.eigenvalues().maxCoeff();
  int rank = 0;
  for (int i = 0; i < 3; ++i) {
    if (eig.eigenvalues()(i) > 1e-10 * top) ++rank;
  }
  return rank;
}

}  // namespace

namespace {

struct LmRun {
  Eigen::Vector3d q;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
  std::uint64_t distance_evaluations = 0;
};

// Least-squares solution of the linear system from differencing squared
// ranges against their mean. Components outside the anchors' affine span are
// kept from `init` (planar anchors leave the normal direction free).
Eigen::Vector3d linearized_start(std::span<const Anchor> anchors, const Eigen::Vector3d& init) {
  const auto m = static_cast<Eigen::Index>(anchors.size());
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  double mean_sq = 0.0;
  double mean_d2 = 0.0;
  for (const auto& a : anchors) {
    mean += to_eigen(a.position);
    mean_sq += to_eigen(a.position).squaredNorm();
    mean_d2 += a.meters * a.meters;
  }
  mean /= static_cast<double>(m);
  mean_sq /= static_cast<double>(m);
  mean_d2 /= static_cast<double>(m);
  Eigen::MatrixXd A(m, 3);
  Eigen::VectorXd b(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& a = anchors[static_cast<std::size_t>(j)];
    const Eigen::Vector3d x = to_eigen(a.position);
    A.row(j) = 2.0 * (x - mean).transpose();
    b(j) = (x.squaredNorm() - mean_sq) - (a.meters * a.meters - mean_d2);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-9);
  return init + svd.solve(b - A * init);
}

// Levenberg-Marquardt on the reweighted normal equations. Damping grows on
// rejected steps, so every accepted step descends; planar problems get no z
// update because the gradient has no z component.
LmRun levenberg_marquardt(std::span<const Anchor> anchors, const Eigen::Vector3d& start,
                          const DetectionParams& params) {
  const auto m = static_cast<std::uint64_t>(anchors.size());
  auto objective = [&](const Eigen::Vector3d& q) { return multilateration_objective(anchors, to_position(q)); };
  LmRun run;
  run.q = start;
  run.f = objective(start);
  run.distance_evaluations += m;
  run.history.push_back(run.f);
  double lambda = -1.0;
  for (int it = 1; it <= params.k_max; ++it) {
    run.iterations = it;
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (const auto& a : anchors) {
      const Eigen::Vector3d diff = run.q - to_eigen(a.position);
      const double dist = diff.norm();
      if (dist == 0.0) continue;
      const Eigen::Vector3d u = diff / dist;
      const double r = dist - a.meters;
      const double w = 1.0 / std::sqrt(1.0 + r * r);
      h += w * u * u.transpose();
      g += w * r * u;
    }
    run.distance_evaluations += m;
    if (lambda < 0.0) lambda = 1e-3 * std::max(h.diagonal().maxCoeff(), 1e-12);

    bool accepted = false;
    double step_len = 0.0;
    while (!accepted && lambda < 1e12) {
      const Eigen::Vector3d step = -(h + lambda * Eigen::Matrix3d::Identity()).ldlt().solve(g);
      const Eigen::Vector3d trial = run.q + step;
      const double f_trial = objective(trial);
      run.distance_evaluations += m;
      if (f_trial <= run.f) {
        accepted = true;
        step_len = step.norm();
        run.q = trial;
        run.f = f_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) {
      // No descent even for a vanishing step: stationary point.
      run.converged = true;
      break;
    }
    run.history.push_back(run.f);
    if (step_len < params.step_tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace

MultilaterationResult multilaterate(std::span<const Anchor> anchors, const Position& init,
                                    const DetectionParams& params) {
  if (anchors.size() < params.min_anchors || anchors.empty()) throw Error("insufficient anchors");
  MultilaterationResult out;
  out.position = init;
  if (affine_rank(anchors) < 2) {
    out.degenerate = true;
    return out;
  }

  // The soft-L1 objective behaves like L1 far from the optimum and has
  // spurious minima where only some spheres meet. A second start from the
  // linearized (squared-range difference) solution avoids most of them; the
  // run with the lower final objective wins.
  const Eigen::Vector3d q0 = to_eigen(init);
  const auto from_init = levenberg_marquardt(anchors, q0, params);
  const auto from_linear = levenberg_marquardt(anchors, linearized_start(anchors, q0), params);
  const LmRun& run = from_linear.f < from_init.f ? from_linear : from_init;
  out.distance_evaluations = from_init.distance_evaluations + from_linear.distance_evaluations;
  out.objective_history = run.history;
  out.iterations = from_init.iterations + from_linear.iterations;
  out.converged = run.converged;
  out.position = to_position(run.q);
  return out;
}

std::vector<VerificationOutcome> verify_and_recover(std::span<const ClientReport> reports,
                                                    const RangeMatrix& ranges,
                                                    std::span<const Position> ins_estimates,
                                                    const DetectionParams& params, OpCounter* ops) {
  params.validate();
  const std::size_t n = reports.size();
  if (ins_estimates.size() != n) throw Error("INS estimate count does not match report count");

  const auto tallies = compute_votes(reports, ranges, params.tau, ops);
  std::vector<bool> flagged(n);
  for (std::size_t i = 0; i < n; ++i) flagged[i] = tallies[i].flagged;

  auto peers_of = [&](std::size_t a, bool unflagged_only) {
    std::vector<Anchor> peers;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || (unflagged_only && flagged[b])) continue;
      peers.push_back({reports[b].reported_position, ranges.at(a, b)});
    }
    return peers;
  };

  if (params.use_residual_detector) {
    std::vector<bool> extra(n, false);
    for (std::size_t a = 0; a < n; ++a) {
      if (flagged[a]) continue;
      const auto peers = peers_of(a, true);
      if (peers.empty()) continue;
      if (ops) ops->distance_evaluations += peers.size();
      extra[a] = residual(reports[a], peers) > params.residual_threshold_T;
    }
    for (std::size_t a = 0; a < n; ++a) flagged[a] = flagged[a] || extra[a];
  }

  std::vector<VerificationOutcome> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    auto& o = out[a];
    o.node_id = reports[a].node_id;
    o.verified_position = reports[a].reported_position;
    o.stage1_flagged = flagged[a];
    o.votes = tallies[a].votes;
    auto peers = peers_of(a, true);
    if (peers.empty()) peers = peers_of(a, false);
    o.residual = residual(reports[a], peers);
    if (ops) ops->distance_evaluations += peers.size();
  }

  for (std::size_t a = 0; a < n; ++a) {
    if (!flagged[a]) continue;
    auto& o = out[a];
    const Position& reported = reports[a].reported_position;

    auto anchors = peers_of(a, true);
    if (anchors.size() < params.min_anchors && params.fallback == FallbackPolicy::all_peers) {
      anchors = peers_of(a, false);
    }

    Position candidate = ins_estimates[a];
    Provenance source = Provenance::ins_fallback;
    if (anchors.size() >= params.min_anchors && !anchors.empty()) {
      std::vector<Position> anchor_points;
      for (const auto& an : anchors) anchor_points.push_back(an.position);
      const Position init = params.init == InitPolicy::reported ? reported : centroid(anchor_points);
      const auto solved = multilaterate(anchors, init, params);
      if (ops) {
        ops->distance_evaluations += anchors.size();
        ops->solver_evaluations += solved.distance_evaluations;
      }
      if (!solved.degenerate && solved.position.is_finite()) {
        candidate = solved.position;
        source = Provenance::multilaterated;
      }
    }

    o.deviation = euclidean_distance(reported, candidate);
    if (o.deviation > params.epsilon) {
      o.verified_position = candidate;
      o.faulty = true;
      o.provenance = source;
    } else {
      o.verified_position = reported;
      o.faulty = false;
      o.provenance = Provenance::accepted_report;
    }
  }
  return out;
}

std::vector<ClientReport> build_reports(std::span<const NodeState> states, const RangeMatrix& ranges) {
  if (ranges.size() != states.size()) throw Error("range matrix dimension does not match node count");
  std::vector<ClientReport> reports(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto& r = reports[i];
    r.node_id = states[i].id;
    r.reported_position = states[i].gnss_reading;
    r.ins_estimate = states[i].ins_estimate;
    for (std::size_t j = 0; j < states.size(); ++j) {
      if (j != i) r.range_row.push_back({states[j].id, ranges.at(i, j)});
    }
  }
  return reports;
}

RangeMatrix ranges_from_reports(std::span<const ClientReport> reports) {
  const std::size_t n = reports.size();
  RangeMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& row = reports[i].range_row;
      const auto it = std::find_if(row.begin(), row.end(),
                                   [&](const RangeEntry& e) { return e.peer == reports[j].node_id; });
      if (it == row.end()) throw Error("report row is missing a peer range");
      d.set_pair(i, j, it->meters);
    }
  }
  return d;
}

}  // namespace swarmraft
