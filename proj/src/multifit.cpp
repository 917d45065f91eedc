#include "parastitch/multifit.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

#include "parastitch/delaunay.hpp"
#include "parastitch/error.hpp"
#include "parastitch/maxflow.hpp"
#include "parastitch/random.hpp"

namespace parastitch {
namespace {

// Row-major N x L matrix of data costs.
struct CostTable {
  std::size_t labels = 0;
  std::vector<double> values;

  double at(std::size_t i, int label) const {
    return values[i * labels + static_cast<std::size_t>(label)];
  }
};

CostTable make_costs(const ModelSet& models,
                     std::span<const FeatureMatch> matches, double gamma) {
  return {models.label_count(), data_costs(models, matches, gamma)};
}

EnergyBreakdown evaluate(const CostTable& costs, const std::vector<int>& label,
                         const NeighborGraph& graph, const EnergyParams& params) {
  EnergyBreakdown e;
  std::vector<bool> used(costs.labels, false);
  for (std::size_t i = 0; i < label.size(); ++i) {
    e.data += costs.at(i, label[i]);
    used[label[i]] = true;
  }
  std::size_t cut = 0;
  for (const auto& [i, j] : graph.edges) {
    if (label[i] != label[j]) ++cut;
  }
  e.smooth = params.lambda * static_cast<double>(cut);
  const auto used_models = std::count(used.begin() + 1, used.end(), true);
  e.label_cost = params.beta * static_cast<double>(used_models);
  e.total = e.data + e.smooth + e.label_cost;
  return e;
}

int best_label(const CostTable& costs, std::size_t i, int excluded = -1) {
  int best = -1;
  for (int l = 0; l < static_cast<int>(costs.labels); ++l) {
    if (l == excluded) continue;
    if (best < 0 || costs.at(i, l) < costs.at(i, best)) best = l;
  }
  return best;
}

bool strictly_lower(double candidate, double current) {
  return candidate < current - 1e-9 * std::max(1.0, std::abs(current));
}

// One binary expansion move toward alpha, solved exactly by min-cut. Besides
// data and smoothness the cut carries the label cost of every other model:
// an auxiliary node per model pays beta unless all of its matches switch.
// Alpha's own label cost is constant over nonempty moves and is left to the
// caller's acceptance test.
std::vector<int> expansion_move(const CostTable& costs,
                                const std::vector<int>& label, int alpha,
                                const NeighborGraph& graph,
                                const EnergyParams& params) {
  const std::size_t n = label.size();
  std::vector<double> keep(n);
  std::vector<double> take(n);
  for (std::size_t i = 0; i < n; ++i) {
    keep[i] = costs.at(i, label[i]);
    take[i] = costs.at(i, alpha);
  }
  std::vector<std::size_t> aux(costs.labels, 0);
  std::size_t nodes = n;
  if (params.beta > 0.0) {
    std::vector<bool> present(costs.labels, false);
    for (int l : label) present[l] = true;
    for (std::size_t l = 1; l < costs.labels; ++l) {
      if (present[l] && static_cast<int>(l) != alpha) aux[l] = nodes++;
    }
  }
  MaxFlowGraph g(nodes);
  const double lambda = params.lambda;
  for (const auto& [i, j] : graph.edges) {
    // x = 0 keeps the current label, x = 1 switches to alpha.
    const double a = label[i] != label[j] ? lambda : 0.0;  // (0,0)
    const double b = label[i] != alpha ? lambda : 0.0;     // (0,1)
    const double c = alpha != label[j] ? lambda : 0.0;     // (1,0)
    const double d = 0.0;                                  // (1,1)
    const double pair = b + c - a - d;
    require(pair >= -1e-12, ErrorCode::kPreconditionViolation,
            "expansion pairwise term is not submodular");
    take[i] += c - a;
    take[j] += d - c;
    g.add_edge(i, j, std::max(pair, 0.0));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = take[i] - keep[i];
    if (diff > 0.0) {
      g.add_terminal(i, diff, 0.0);
    } else if (diff < 0.0) {
      g.add_terminal(i, 0.0, -diff);
    }
  }
  if (nodes > n) {
    double big = params.beta * static_cast<double>(costs.labels) +
                 lambda * static_cast<double>(graph.edges.size()) + 1.0;
    for (std::size_t i = 0; i < n; ++i) big += std::abs(take[i] - keep[i]);
    for (std::size_t l = 1; l < costs.labels; ++l) {
      if (aux[l] != 0) g.add_terminal(aux[l], 0.0, params.beta);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t y = aux[static_cast<std::size_t>(label[i])];
      if (y != 0) g.add_edge(i, y, big);
    }
  }
  g.solve();
  std::vector<int> out = label;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.on_sink_side(i)) out[i] = alpha;
  }
  return out;
}

std::vector<int> expand_with_costs(const CostTable& costs,
                                   std::vector<int> label,
                                   const NeighborGraph& graph,
                                   const EnergyParams& params) {
  double current = evaluate(costs, label, graph, params).total;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int alpha = 0; alpha < static_cast<int>(costs.labels); ++alpha) {
      auto candidate = expansion_move(costs, label, alpha, graph, params);
      if (candidate == label) continue;
      const double e = evaluate(costs, candidate, graph, params).total;
      if (strictly_lower(e, current)) {
        label = std::move(candidate);
        current = e;
        changed = true;
      }
    }
  }
  return label;
}

void remove_model(ModelSet& models, std::vector<int>& label, int removed,
                  const CostTable& costs) {
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == removed) label[i] = best_label(costs, i, removed);
  }
  for (auto& l : label) {
    if (l > removed) --l;
  }
  models.models.erase(models.models.begin() + (removed - 1));
}

std::vector<std::size_t> support_counts(const ModelSet& models,
                                        const std::vector<int>& label) {
  std::vector<std::size_t> support(models.label_count(), 0);
  for (auto l : label) ++support[l];
  return support;
}

bool non_collinear(const FeatureMatch* s[4]) {
  auto area = [](Point2 a, Point2 b, Point2 c) {
    return std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  };
  for (int i = 0; i < 4; ++i) {
    const int a = (i + 1) % 4, b = (i + 2) % 4, c = (i + 3) % 4;
    if (area(s[a]->target_pt, s[b]->target_pt, s[c]->target_pt) < 1e-6 ||
        area(s[a]->ref_pt, s[b]->ref_pt, s[c]->ref_pt) < 1e-6) {
      return false;
    }
  }
  return true;
}

}  // namespace

NeighborGraph build_neighborhood(std::span<const FeatureMatch> matches,
                                 std::span<const std::uint32_t> content_ids,
                                 const OverlapMask& overlap,
                                 NeighborhoodMode mode) {
  require(content_ids.size() == matches.size(),
          ErrorCode::kPreconditionViolation,
          "content ids must align with matches");
  std::vector<Point2> pts;
  pts.reserve(matches.size());
  for (const auto& m : matches) pts.push_back(m.target_pt);

  std::vector<std::pair<std::size_t, std::size_t>> raw;
  try {
    raw = delaunay_edges(pts);
  } catch (const Error& e) {
    std::clog << "warning: " << e.what() << "; neighborhood graph is empty\n";
    return {};
  }
  // Matches sharing a target point are triangulated once; give every copy the
  // representative's edges and link the copies to each other.
  std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    groups[{pts[i].x, pts[i].y}].push_back(i);
  }
  auto members = [&](std::size_t i) -> const std::vector<std::size_t>& {
    return groups.at({pts[i].x, pts[i].y});
  };
  std::vector<std::pair<std::size_t, std::size_t>> expanded;
  for (const auto& [a, b] : raw) {
    for (auto i : members(a))
      for (auto j : members(b)) expanded.emplace_back(std::min(i, j), std::max(i, j));
  }
  for (const auto& [key, group] : groups) {
    for (std::size_t u = 0; u < group.size(); ++u)
      for (std::size_t v = u + 1; v < group.size(); ++v)
        expanded.emplace_back(group[u], group[v]);
  }
  std::sort(expanded.begin(), expanded.end());
  expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());

  NeighborGraph g;
  for (const auto& [i, j] : expanded) {
    if (mode == NeighborhoodMode::kContentAware) {
      if (content_ids[i] == 0 || content_ids[i] != content_ids[j]) continue;
      if (!overlap.in_overlap(pts[i]) || !overlap.in_overlap(pts[j])) continue;
    }
    g.edges.emplace_back(i, j);
  }
  return g;
}

ModelSet init_models_iterative_ransac(std::span<const FeatureMatch> matches,
                                      const EnergyParams& params,
                                      std::uint64_t seed) {
  require(matches.size() >= 4, ErrorCode::kPreconditionViolation,
          "model initialization needs at least 4 matches");
  Rng rng(seed);
  ModelSet out;
  std::vector<std::size_t> remaining(matches.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<FeatureMatch> subset;

  auto inliers_of = [&](const Homography& h, double* ste_sum) {
    std::vector<std::size_t> in;
    double sum = 0.0;
    for (auto i : remaining) {
      const double e = symmetric_transfer_error(h, matches[i]);
      if (e < params.ransac_threshold) {
        in.push_back(i);
        sum += e;
      }
    }
    if (ste_sum) *ste_sum = sum;
    return in;
  };

  bool first = true;
  while (remaining.size() >= 4 &&
         (first || remaining.size() >= params.min_remaining)) {
    std::optional<Homography> best;
    std::size_t best_count = 0;
    double best_sum = 0.0;
    double needed = params.ransac_max_trials;
    for (int trial = 0; trial < params.ransac_max_trials && trial < needed;
         ++trial) {
      std::size_t pick[4];
      for (int k = 0; k < 4; ++k) {
        bool fresh;
        do {
          pick[k] = remaining[rng.index(remaining.size())];
          fresh = std::find(pick, pick + k, pick[k]) == pick + k;
        } while (!fresh);
      }
      const FeatureMatch* sample[4] = {&matches[pick[0]], &matches[pick[1]],
                                       &matches[pick[2]], &matches[pick[3]]};
      if (!non_collinear(sample)) continue;
      const FeatureMatch four[4] = {*sample[0], *sample[1], *sample[2],
                                    *sample[3]};
      std::optional<Homography> h;
      try {
        h = estimate_homography_dlt(four);
      } catch (const Error&) {
        continue;
      }
      double sum = 0.0;
      const auto in = inliers_of(*h, &sum);
      if (in.size() > best_count || (in.size() == best_count && sum < best_sum)) {
        best = h;
        best_count = in.size();
        best_sum = sum;
        const double w = static_cast<double>(in.size()) /
                         static_cast<double>(remaining.size());
        const double miss = 1.0 - std::pow(w, 4.0);
        needed = miss <= 0.0 ? 0.0
                             : std::log(1.0 - params.ransac_confidence) /
                                   std::log(miss);
      }
    }
    if (!best || best_count < params.min_support) {
      if (first) {
        fail(ErrorCode::kNoModelFound,
             "iterative RANSAC found no model with " +
                 std::to_string(params.min_support) + " inliers");
      }
      break;
    }
    auto in = inliers_of(*best, nullptr);
    subset.clear();
    for (auto i : in) subset.push_back(matches[i]);
    Homography model = *best;
    const auto refined = refine_homography_lm(*best, subset);
    const auto refined_in = inliers_of(refined.h, nullptr);
    if (refined_in.size() >= in.size()) {
      model = refined.h;
      in = refined_in;
    }
    out.models.push_back(model);
    std::vector<std::size_t> rest;
    std::set_difference(remaining.begin(), remaining.end(), in.begin(), in.end(),
                        std::back_inserter(rest));
    remaining = std::move(rest);
    first = false;
  }
  return out;
}

std::vector<double> data_costs(const ModelSet& models,
                               std::span<const FeatureMatch> matches,
                               double gamma) {
  const std::size_t labels = models.label_count();
  std::vector<double> out(matches.size() * labels);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    out[i * labels] = gamma;
    for (std::size_t k = 0; k < models.models.size(); ++k) {
      const double e = symmetric_transfer_error(models.models[k], matches[i]);
      out[i * labels + k + 1] = std::isfinite(e) ? std::min(e, kMaxDataCost)
                                                 : kMaxDataCost;
    }
  }
  return out;
}

EnergyBreakdown energy(const ModelSet& models, const Assignment& assign,
                       const NeighborGraph& graph,
                       std::span<const FeatureMatch> matches,
                       const EnergyParams& params) {
  require(assign.label.size() == matches.size(),
          ErrorCode::kPreconditionViolation,
          "assignment size differs from match count");
  for (auto l : assign.label) {
    require(l >= 0 && static_cast<std::size_t>(l) < models.label_count(),
            ErrorCode::kPreconditionViolation, "label out of range");
  }
  return evaluate(make_costs(models, matches, params.gamma), assign.label,
                  graph, params);
}

Assignment assign_best_labels(const ModelSet& models,
                              std::span<const FeatureMatch> matches,
                              const EnergyParams& params) {
  const auto costs = make_costs(models, matches, params.gamma);
  Assignment a;
  a.label.resize(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) a.label[i] = best_label(costs, i);
  return a;
}

Assignment expand_labels(const ModelSet& models, const Assignment& assign,
                         const NeighborGraph& graph,
                         std::span<const FeatureMatch> matches,
                         const EnergyParams& params) {
  require(params.lambda >= 0.0, ErrorCode::kPreconditionViolation,
          "negative smoothness weight breaks submodularity");
  const auto costs = make_costs(models, matches, params.gamma);
  return {expand_with_costs(costs, assign.label, graph, params)};
}

bool prune_models(ModelSet& models, Assignment& assign,
                  const NeighborGraph& graph,
                  std::span<const FeatureMatch> matches,
                  const EnergyParams& params) {
  bool removed_any = false;
  auto costs = make_costs(models, matches, params.gamma);
  // Unsupported models cost nothing and change nothing; drop them first.
  for (int k = static_cast<int>(models.models.size()); k >= 1; --k) {
    if (support_counts(models, assign.label)[k] == 0) {
      remove_model(models, assign.label, k, costs);
      costs = make_costs(models, matches, params.gamma);
      removed_any = true;
    }
  }
  double current = evaluate(costs, assign.label, graph, params).total;
  int k = 1;
  while (k <= static_cast<int>(models.models.size())) {
    ModelSet trial_models = models;
    std::vector<int> trial_label = assign.label;
    remove_model(trial_models, trial_label, k, costs);
    const auto trial_costs = make_costs(trial_models, matches, params.gamma);
    const double e = evaluate(trial_costs, trial_label, graph, params).total;
    if (strictly_lower(e, current)) {
      models = std::move(trial_models);
      assign.label = std::move(trial_label);
      costs = trial_costs;
      current = e;
      removed_any = true;
    } else {
      ++k;
    }
  }
  return removed_any;
}

FitResult fit(std::span<const FeatureMatch> matches, const NeighborGraph& graph,
              const EnergyParams& params, std::uint64_t seed) {
  require(matches.size() >= 4, ErrorCode::kPreconditionViolation,
          "fitting needs at least 4 matches");
  return fit_from_models(init_models_iterative_ransac(matches, params, seed),
                         matches, graph, params);
}

FitResult fit_from_models(const ModelSet& initial,
                          std::span<const FeatureMatch> matches,
                          const NeighborGraph& graph,
                          const EnergyParams& params) {
  FitResult r;
  r.initial_models = initial;
  r.initial_assignment = assign_best_labels(initial, matches, params);
  r.models = initial;
  r.assignment = r.initial_assignment;
  r.energy = energy(r.models, r.assignment, graph, matches, params);
  r.energy_history.push_back(r.energy.total);

  std::vector<FeatureMatch> subset;
  for (int outer = 0; outer < params.max_outer_iterations; ++outer) {
    ModelSet models = r.models;
    auto costs = make_costs(models, matches, params.gamma);
    std::vector<int> label =
        expand_with_costs(costs, r.assignment.label, graph, params);

    // Refit supported models; drop the rest.
    const auto support = support_counts(models, label);
    for (int k = static_cast<int>(models.models.size()); k >= 1; --k) {
      if (support[k] < params.min_support) {
        remove_model(models, label, k, costs);
        costs = make_costs(models, matches, params.gamma);
      }
    }
    for (std::size_t k = 0; k < models.models.size(); ++k) {
      subset.clear();
      for (std::size_t i = 0; i < matches.size(); ++i) {
        if (label[i] == static_cast<int>(k) + 1) subset.push_back(matches[i]);
      }
      if (subset.size() >= 4) {
        models.models[k] = refine_homography_lm(models.models[k], subset).h;
      }
    }

    Assignment assign{label};
    prune_models(models, assign, graph, matches, params);
    const auto e = energy(models, assign, graph, matches, params);
    ++r.outer_iterations;
    if (e.total > r.energy.total) {
      ++r.rejected_iterations;
      break;
    }
    const double previous = r.energy.total;
    r.models = std::move(models);
    r.assignment = std::move(assign);
    r.energy = e;
    r.energy_history.push_back(e.total);
    if (previous <= 0.0 ||
        (previous - e.total) / previous < params.relative_tolerance) {
      break;
    }
  }
  return r;
}

}  // namespace parastitch
