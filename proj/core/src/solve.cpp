#include "dpp/solve.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dpp {

namespace {

double rms_of(const Eigen::VectorXd& r) {
  if (r.size() == 0) return 0.0;
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

Eigen::VectorXd head_of(const Vec3& v, int dim) { return v.head(dim); }

Vec3 pad_to3(const Eigen::VectorXd& v) {
  Vec3 out = Vec3::Zero();
  out.head(v.size()) = v;
  return out;
}

}  // namespace

LsqResult levenberg_gauss_newton(const ResidualFn& fn, Eigen::VectorXd x0,
                                 const LsqOptions& opt) {
  LsqResult result;
  result.x = std::move(x0);

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  fn(result.x, r, J);
  double cost = r.squaredNorm();
  result.residual_rms = rms_of(r);
  result.accepted_rms.push_back(result.residual_rms);
  if (cost == 0.0) {
    result.step_converged = true;
    return result;
  }

  double lambda = 0.0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    const double diag_scale = std::max(jtj.diagonal().maxCoeff(), 1e-300);

    bool accepted = false;
    Eigen::VectorXd step;
    for (int attempt = 0; attempt < 25; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal().array() += lambda * diag_scale;
      step = damped.ldlt().solve(-g);
      if (step.allFinite()) {
        Eigen::VectorXd r_new;
        Eigen::MatrixXd J_new;
        fn(result.x + step, r_new, J_new);
        const double cost_new = r_new.squaredNorm();
        if (std::isfinite(cost_new) && cost_new <= cost) {
          result.x += step;
          r.swap(r_new);
          J.swap(J_new);
          cost = cost_new;
          lambda = (lambda == 0.0) ? 0.0 : lambda / 4.0;
          if (lambda < 1e-14) lambda = 0.0;
          accepted = true;
          break;
        }
      }
      lambda = (lambda == 0.0) ? 1e-10 : lambda * 10.0;
    }
    result.iterations = iter + 1;
    result.residual_rms = rms_of(r);
    if (!accepted) break;  // stalled at a (local) minimum
    result.accepted_rms.push_back(result.residual_rms);
    if (step.norm() <= opt.step_tol * (1.0 + result.x.norm())) {
      result.step_converged = true;
      break;
    }
    if (cost == 0.0) {
      result.step_converged = true;
      break;
    }
  }
  return result;
}

PositionEstimate solve_toa(const std::map<PairKey, double>& distances_m,
                           const std::map<NodeId, Vec3>& anchors_m,
                           NodeId unknown, int dimension,
                           double signal_speed) {
  if (dimension != 2 && dimension != 3) {
    throw InvalidInputError("solve_toa: dimension must be 2 or 3");
  }
  std::vector<std::pair<Vec3, double>> ranges;
  for (const auto& [pair, d] : distances_m) {
    NodeId other;
    if (pair.a == unknown) {
      other = pair.b;
    } else if (pair.b == unknown) {
      other = pair.a;
    } else {
      continue;
    }
    auto it = anchors_m.find(other);
    if (it == anchors_m.end()) continue;
    ranges.emplace_back(it->second, d);
  }
  if (ranges.size() < static_cast<std::size_t>(dimension + 1)) {
    throw InsufficientInputError(
        "solve_toa: needs at least dimension + 1 anchor distances");
  }

  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dimension);
  for (const auto& [a, d] : ranges) centroid += head_of(a, dimension);
  centroid /= static_cast<double>(ranges.size());

  const auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                      Eigen::MatrixXd& J) {
    r.resize(static_cast<Eigen::Index>(ranges.size()));
    J.resize(static_cast<Eigen::Index>(ranges.size()), dimension);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const Eigen::VectorXd diff =
          x - head_of(ranges[static_cast<std::size_t>(i)].first, dimension);
      const double norm = diff.norm();
      r(i) = norm - ranges[static_cast<std::size_t>(i)].second;
      if (norm > 1e-12) {
        J.row(i) = (diff / norm).transpose();
      } else {
        J.row(i).setZero();
      }
    }
  };

  const LsqResult lsq = levenberg_gauss_newton(fn, centroid);
  PositionEstimate est;
  est.node = unknown;
  est.position = pad_to3(lsq.x);
  est.residual_rms_m = lsq.residual_rms;
  est.residual_rms_s = lsq.residual_rms / signal_speed;
  est.iterations = lsq.iterations;
  est.converged = est.residual_rms_s <= kConvergedResidualTol;
  return est;
}

PositionEstimate solve_tdoa(const std::vector<TdoaConstraint>& tdoas,
                            const std::map<NodeId, Vec3>& anchors_m,
                            NodeId unknown, double signal_speed,
                            int dimension) {
  if (dimension != 2 && dimension != 3) {
    throw InvalidInputError("solve_tdoa: dimension must be 2 or 3");
  }
  if (!(signal_speed > 0.0)) {
    throw InvalidInputError("solve_tdoa: signal speed must be positive");
  }
  if (tdoas.size() < static_cast<std::size_t>(dimension + 1)) {
    throw InsufficientInputError(
        "solve_tdoa: needs at least dimension + 1 TDoA values");
  }
  struct Row {
    Eigen::VectorXd first, second;
    double value;
  };
  std::vector<Row> rows;
  std::set<std::uint32_t> used;
  for (const TdoaConstraint& c : tdoas) {
    auto fa = anchors_m.find(c.first);
    auto fb = anchors_m.find(c.second);
    if (fa == anchors_m.end() || fb == anchors_m.end()) {
      throw InvalidInputError("solve_tdoa: constraint references a node "
                              "without a known position");
    }
    rows.push_back({head_of(fa->second, dimension),
                    head_of(fb->second, dimension), c.value_s});
    used.insert(c.first.value);
    used.insert(c.second.value);
  }

  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dimension);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dimension, 1e300);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(dimension, -1e300);
  {
    int count = 0;
    for (const auto& [id, pos] : anchors_m) {
      if (!used.count(id.value)) continue;
      const Eigen::VectorXd p = head_of(pos, dimension);
      centroid += p;
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
      ++count;
    }
    centroid /= static_cast<double>(count);
  }
  const double scale = std::max((hi - lo).norm(), 1.0);

  const auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                      Eigen::MatrixXd& J) {
    r.resize(static_cast<Eigen::Index>(rows.size()));
    J.resize(static_cast<Eigen::Index>(rows.size()), dimension);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const Row& row = rows[static_cast<std::size_t>(i)];
      const Eigen::VectorXd df = x - row.first;
      const Eigen::VectorXd ds = x - row.second;
      const double nf = df.norm();
      const double ns = ds.norm();
      r(i) = (ns - nf) / signal_speed - row.value;
      Eigen::RowVectorXd grad = Eigen::RowVectorXd::Zero(dimension);
      if (ns > 1e-12) grad += (ds / ns).transpose();
      if (nf > 1e-12) grad -= (df / nf).transpose();
      J.row(i) = grad / signal_speed;
    }
  };

  // Deterministic multi-start: centroid first, then axis-shifted seeds to
  // surface a mirrored solution when the constraints leave one.
  std::vector<Eigen::VectorXd> seeds{centroid};
  for (int k = 0; k < dimension; ++k) {
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(dimension);
    offset(k) = 0.5 * scale;
    seeds.push_back(centroid + offset);
    seeds.push_back(centroid - offset);
  }

  struct Candidate {
    LsqResult lsq;
  };
  std::vector<Candidate> candidates;
  for (const Eigen::VectorXd& seed : seeds) {
    LsqResult lsq = levenberg_gauss_newton(fn, seed);
    bool duplicate = false;
    for (const Candidate& c : candidates) {
      if ((c.lsq.x - lsq.x).norm() <= 1e-6 * scale) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) candidates.push_back({std::move(lsq)});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.lsq.residual_rms < b.lsq.residual_rms;
                   });

  const LsqResult& best = candidates.front().lsq;
  PositionEstimate est;
  est.node = unknown;
  est.position = pad_to3(best.x);
  est.residual_rms_s = best.residual_rms;
  est.residual_rms_m = best.residual_rms * signal_speed;
  est.iterations = best.iterations;
  est.converged = est.residual_rms_s <= kConvergedResidualTol;
  const double tie_tol = std::max(1e-12, 1.05 * best.residual_rms);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].lsq.residual_rms <= tie_tol) {
      est.alternates.push_back(pad_to3(candidates[i].lsq.x));
    }
  }
  return est;
}

namespace {

Eigen::MatrixXd classical_mds(const Eigen::MatrixXd& dist, int dimension) {
  const Eigen::Index n = dist.rows();
  const Eigen::MatrixXd d2 = dist.array().square();
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) -
      Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd gram = -0.5 * centering * d2 * centering;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  Eigen::MatrixXd coords(n, dimension);
  for (int k = 0; k < dimension; ++k) {
    const Eigen::Index idx = n - 1 - k;  // eigenvalues ascend
    const double lambda = std::max(eig.eigenvalues()(idx), 0.0);
    coords.col(k) = eig.eigenvectors().col(idx) * std::sqrt(lambda);
  }
  return coords;
}

void gauge_fix(Eigen::MatrixXd& coords, int dimension) {
  const Eigen::Index n = coords.rows();
  const Eigen::RowVectorXd origin = coords.row(0);  // copy before shifting
  coords.rowwise() -= origin;
  if (n < 2) return;

  if (dimension == 2) {
    const double theta = std::atan2(coords(1, 1), coords(1, 0));
    Eigen::Matrix2d rot;
    rot << std::cos(-theta), -std::sin(-theta), std::sin(-theta),
        std::cos(-theta);
    coords = coords * rot.transpose();
    coords(1, 1) = 0.0;
    if (n >= 3 && coords(2, 1) < 0.0) coords.col(1) = -coords.col(1);
  } else {
    Eigen::Vector3d axis = coords.row(1).transpose();
    if (axis.norm() > 1e-12) {
      const Eigen::Quaterniond q =
          Eigen::Quaterniond::FromTwoVectors(axis, Eigen::Vector3d::UnitX());
      coords = coords * q.toRotationMatrix().transpose();
    }
    coords(1, 1) = 0.0;
    coords(1, 2) = 0.0;
    if (n >= 3) {
      const double phi = std::atan2(coords(2, 2), coords(2, 1));
      Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
      rot(1, 1) = std::cos(-phi);
      rot(1, 2) = -std::sin(-phi);
      rot(2, 1) = std::sin(-phi);
      rot(2, 2) = std::cos(-phi);
      coords = coords * rot.transpose();
      coords(2, 2) = 0.0;
      if (coords(2, 1) < 0.0) coords.col(1) = -coords.col(1);
    }
    if (n >= 4 && coords(3, 2) < 0.0) coords.col(2) = -coords.col(2);
  }
}

}  // namespace

RelativeFrame embed_relative(const std::map<PairKey, double>& distances_m,
                             const std::vector<NodeId>& nodes, int dimension) {
  if (dimension != 2 && dimension != 3) {
    throw InvalidInputError("embed_relative: dimension must be 2 or 3");
  }
  const std::size_t n = nodes.size();
  if (n < static_cast<std::size_t>(dimension + 1)) {
    throw InsufficientInputError(
        "embed_relative: needs at least dimension + 1 nodes");
  }
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                               static_cast<Eigen::Index>(n));
  double mean_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto it = distances_m.find(PairKey::make(nodes[i], nodes[j]));
      if (it == distances_m.end()) {
        throw InsufficientInputError(
            "embed_relative: incomplete pairwise distance set");
      }
      if (!(it->second >= 0.0) || !std::isfinite(it->second)) {
        throw InvalidInputError("embed_relative: invalid distance");
      }
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          it->second;
      dist(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          it->second;
      mean_d += it->second;
    }
  }
  mean_d /= static_cast<double>(n * (n - 1) / 2);

  Eigen::MatrixXd coords = classical_mds(dist, dimension);

  // Least-squares refinement over all coordinates; damping absorbs the
  // rigid-motion null space.
  const Eigen::Index n_pairs = static_cast<Eigen::Index>(n * (n - 1) / 2);
  const auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                      Eigen::MatrixXd& J) {
    r.resize(n_pairs);
    J = Eigen::MatrixXd::Zero(n_pairs, x.size());
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++row) {
        const Eigen::VectorXd pi = x.segment(
            static_cast<Eigen::Index>(i) * dimension, dimension);
        const Eigen::VectorXd pj = x.segment(
            static_cast<Eigen::Index>(j) * dimension, dimension);
        const Eigen::VectorXd diff = pi - pj;
        const double norm = diff.norm();
        r(row) = norm - dist(static_cast<Eigen::Index>(i),
                             static_cast<Eigen::Index>(j));
        if (norm > 1e-12) {
          const Eigen::RowVectorXd g = (diff / norm).transpose();
          J.block(row, static_cast<Eigen::Index>(i) * dimension, 1,
                  dimension) = g;
          J.block(row, static_cast<Eigen::Index>(j) * dimension, 1,
                  dimension) = -g;
        }
      }
    }
  };
  Eigen::VectorXd x0(static_cast<Eigen::Index>(n) * dimension);
  for (std::size_t i = 0; i < n; ++i) {
    x0.segment(static_cast<Eigen::Index>(i) * dimension, dimension) =
        coords.row(static_cast<Eigen::Index>(i)).transpose();
  }
  const LsqResult lsq = levenberg_gauss_newton(fn, x0);
  for (std::size_t i = 0; i < n; ++i) {
    coords.row(static_cast<Eigen::Index>(i)) =
        lsq.x.segment(static_cast<Eigen::Index>(i) * dimension, dimension)
            .transpose();
  }
  if (mean_d > 0.0 && lsq.residual_rms > 0.25 * mean_d) {
    throw MetricFeasibilityError(
        "embed_relative: distance set is not metrically embeddable in the "
        "requested dimension");
  }

  gauge_fix(coords, dimension);

  RelativeFrame frame;
  frame.gauge = {nodes[0], nodes[1], nodes[std::min<std::size_t>(2, n - 1)]};
  frame.residual_rms_m = lsq.residual_rms;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p = Vec3::Zero();
    p.head(dimension) = coords.row(static_cast<Eigen::Index>(i)).transpose();
    frame.coordinates[nodes[i]] = p;
  }
  return frame;
}

namespace {

/// Hyperbolic constraints available for `target` given anchor positions and
/// a distance oracle between anchors (seconds).
std::vector<TdoaConstraint> target_constraints(
    const MeasurementSet& ms, const std::map<NodeId, Vec3>& anchors,
    const std::function<std::optional<double>(NodeId, NodeId)>& known_d_s,
    NodeId target) {
  std::vector<TdoaConstraint> out;
  for (const auto& [key, mu_value] : ms.mu) {
    if (key.x == target && anchors.count(key.y) && anchors.count(key.z)) {
      if (auto d = known_d_s(key.y, key.z)) {
        out.push_back({key.y, key.z, tdoa_alternate(mu_value, *d)});
      }
    } else if (key.y == target && anchors.count(key.x) &&
               anchors.count(key.z)) {
      if (auto d = known_d_s(key.x, key.z)) {
        out.push_back({key.x, key.z, tdoa_from_mu(mu_value, *d)});
      }
    }
  }
  return out;
}

}  // namespace

PipelineResult pipeline_mobile(const MeasurementSet& measurements,
                               const System& system) {
  const int dim = system.dimension();
  std::vector<NodeId> bilaterals = system.ids_with_role(NodeRole::Bilateral);
  if (bilaterals.size() < static_cast<std::size_t>(dim + 1)) {
    throw InsufficientInputError(
        "pipeline_mobile: needs at least dimension + 1 Bilateral nodes");
  }

  std::map<PairKey, double> distances_m;
  for (const auto& [pair, toa_s] : measurements.toa) {
    distances_m[pair] = toa_s * measurements.signal_speed;
  }
  PipelineResult result;
  result.frame = embed_relative(distances_m, bilaterals, dim);

  const auto known_d_s = [&](NodeId a, NodeId b) -> std::optional<double> {
    auto it = measurements.toa.find(PairKey::make(a, b));
    if (it == measurements.toa.end()) return std::nullopt;
    return it->second;
  };

  for (const Node& node : system.nodes()) {
    if (node.role == NodeRole::Bilateral) continue;
    const auto constraints =
        target_constraints(measurements, result.frame.coordinates, known_d_s,
                           node.id);
    try {
      result.estimates[node.id] =
          solve_tdoa(constraints, result.frame.coordinates, node.id,
                     measurements.signal_speed, dim);
    } catch (const InsufficientInputError& e) {
      result.unsolved.emplace_back(node.id, e.what());
    }
  }
  return result;
}

ProcrustesResult procrustes_align(const std::map<NodeId, Vec3>& estimate,
                                  const std::map<NodeId, Vec3>& truth,
                                  int dimension, bool allow_reflection) {
  if (estimate.size() != truth.size() || estimate.size() < 3) {
    throw InvalidInputError(
        "procrustes_align: needs the same node set with >= 3 nodes");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(estimate.size());
  Eigen::MatrixXd p(n, dimension), q(n, dimension);
  Eigen::Index row = 0;
  for (const auto& [id, pos] : estimate) {
    auto it = truth.find(id);
    if (it == truth.end()) {
      throw InvalidInputError("procrustes_align: node sets differ");
    }
    p.row(row) = pos.head(dimension).transpose();
    q.row(row) = it->second.head(dimension).transpose();
    ++row;
  }
  p.rowwise() -= p.colwise().mean();
  q.rowwise() -= q.colwise().mean();

  const Eigen::MatrixXd h = p.transpose() * q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      h, Eigen::ComputeFullU | Eigen::ComputeFullV);

  ProcrustesResult result;
  const Eigen::VectorXd sv = svd.singularValues();
  result.degenerate = sv(dimension - 1) <= 1e-12 * std::max(sv(0), 1e-300);

  Eigen::MatrixXd rot = svd.matrixV() * svd.matrixU().transpose();
  if (rot.determinant() < 0.0) {
    if (allow_reflection) {
      result.reflection_used = true;
    } else {
      Eigen::VectorXd flip = Eigen::VectorXd::Ones(dimension);
      flip(dimension - 1) = -1.0;
      rot = svd.matrixV() * flip.asDiagonal() * svd.matrixU().transpose();
    }
  }
  const Eigen::MatrixXd aligned = p * rot.transpose();
  result.rms_m =
      std::sqrt((aligned - q).rowwise().squaredNorm().sum() /
                static_cast<double>(n));
  return result;
}

SolveReport solve_scenario(const System& system, const MeasurementSet& ms) {
  const int dim = system.dimension();
  std::map<NodeId, Vec3> anchors;
  for (const Node& n : system.nodes()) {
    if (n.known_position) anchors[n.id] = n.position;
  }

  SolveReport report;
  if (anchors.size() >= static_cast<std::size_t>(dim + 1)) {
    report.mode = SolveMode::Absolute;
    report.positions = anchors;

    const auto known_d_s = [&](NodeId a, NodeId b) -> std::optional<double> {
      if (auto it = ms.toa.find(PairKey::make(a, b)); it != ms.toa.end()) {
        return it->second;
      }
      const Node& na = system.node(a);
      const Node& nb = system.node(b);
      if (na.known_position && nb.known_position) {
        return tof_distance(na, nb, system.signal_speed());
      }
      return std::nullopt;
    };

    for (const Node& node : system.nodes()) {
      if (node.known_position) continue;
      // Bilateral targets that measured enough ranges get trilaterated.
      if (node.role == NodeRole::Bilateral) {
        std::map<PairKey, double> ranges;
        for (const auto& [pair, toa_s] : ms.toa) {
          NodeId other;
          if (pair.a == node.id) {
            other = pair.b;
          } else if (pair.b == node.id) {
            other = pair.a;
          } else {
            continue;
          }
          if (anchors.count(other)) {
            ranges[pair] = toa_s * ms.signal_speed;
          }
        }
        if (ranges.size() >= static_cast<std::size_t>(dim + 1)) {
          report.estimates[node.id] = solve_toa(
              ranges, anchors, node.id, dim, system.signal_speed());
          report.positions[node.id] = report.estimates[node.id].position;
          continue;
        }
      }
      const auto constraints =
          target_constraints(ms, anchors, known_d_s, node.id);
      try {
        report.estimates[node.id] = solve_tdoa(
            constraints, anchors, node.id, system.signal_speed(), dim);
        report.positions[node.id] = report.estimates[node.id].position;
      } catch (const InsufficientInputError& e) {
        report.unsolved.emplace_back(node.id, e.what());
      }
    }
    return report;
  }

  report.mode = SolveMode::Relative;
  PipelineResult pipeline = pipeline_mobile(ms, system);
  report.positions = pipeline.frame.coordinates;
  report.frame = std::move(pipeline.frame);
  report.estimates = std::move(pipeline.estimates);
  report.unsolved = std::move(pipeline.unsolved);
  for (const auto& [id, est] : report.estimates) {
    report.positions[id] = est.position;
  }
  return report;
}

}  // namespace dpp
