#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "parastitch/geometry.hpp"
#include "parastitch/segmentation.hpp"

namespace parastitch {

// Fitted homographies. Label 0 is the outlier label; label k >= 1 refers to
// models[k - 1].
struct ModelSet {
  std::vector<Homography> models;

  std::size_t label_count() const { return models.size() + 1; }
};

inline constexpr int kOutlierLabel = 0;

struct Assignment {
  std::vector<int> label;  // one per match

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct NeighborGraph {
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted
};

struct EnergyParams {
  double lambda = 20.0;
  double beta = 10.0;
  double gamma = 200.0;
  std::size_t min_remaining = 50;

  double ransac_threshold = 3.0;  // symmetric transfer error, pixels
  double ransac_confidence = 0.995;
  int ransac_max_trials = 2000;
  std::size_t min_support = 8;
  int max_outer_iterations = 20;
  double relative_tolerance = 1e-6;
};

struct EnergyBreakdown {
  double data = 0.0;
  double smooth = 0.0;
  double label_cost = 0.0;
  double total = 0.0;
};

enum class NeighborhoodMode {
  kContentAware,  // Delaunay edges inside one content of the overlap region
  kDelaunayOnly,  // every Delaunay edge
};

// Delaunay graph over the target points, optionally restricted to edges whose
// endpoints share a content and both lie in the overlap. Collinear input
// yields an empty graph (logged).
NeighborGraph build_neighborhood(std::span<const FeatureMatch> matches,
                                 std::span<const std::uint32_t> content_ids,
                                 const OverlapMask& overlap,
                                 NeighborhoodMode mode =
                                     NeighborhoodMode::kContentAware);

// Sequential RANSAC: repeatedly extracts a 4-point consensus model from the
// unclaimed matches, refines it, and removes its inliers, until fewer than
// min_remaining matches are left or a round finds fewer than min_support
// inliers. Throws kNoModelFound if the first round fails.
ModelSet init_models_iterative_ransac(std::span<const FeatureMatch> matches,
                                      const EnergyParams& params,
                                      std::uint64_t seed);

// Data cost of match i under each label; +inf transfer errors are clamped to
// kMaxDataCost.
inline constexpr double kMaxDataCost = 1e9;
std::vector<double> data_costs(const ModelSet& models,
                               std::span<const FeatureMatch> matches,
                               double gamma);

EnergyBreakdown energy(const ModelSet& models, const Assignment& assign,
                       const NeighborGraph& graph,
                       std::span<const FeatureMatch> matches,
                       const EnergyParams& params);

// Per-match argmin of the data cost; ties go to the lowest label.
Assignment assign_best_labels(const ModelSet& models,
                              std::span<const FeatureMatch> matches,
                              const EnergyParams& params);

// Alpha-expansion sweeps over all labels (outlier label included) with each
// binary move solved by min-cut. A move is kept only if it strictly lowers the
// total energy; stops after a sweep with no change.
Assignment expand_labels(const ModelSet& models, const Assignment& assign,
                         const NeighborGraph& graph,
                         std::span<const FeatureMatch> matches,
                         const EnergyParams& params);

// Tentatively deletes each model in turn (its matches move to their next-best
// label by data cost) and keeps the deletion iff the total energy drops.
// Models without support are removed as well. Returns true if any model was
// removed.
bool prune_models(ModelSet& models, Assignment& assign,
                  const NeighborGraph& graph,
                  std::span<const FeatureMatch> matches,
                  const EnergyParams& params);

struct FitResult {
  ModelSet models;
  Assignment assignment;
  EnergyBreakdown energy;
  ModelSet initial_models;
  Assignment initial_assignment;
  // Total energy of the initial state followed by each accepted outer
  // iteration.
  std::vector<double> energy_history;
  int outer_iterations = 0;
  // Outer iterations whose result was discarded because the energy rose.
  int rejected_iterations = 0;
};

// Alternates expansion, per-model refitting, and model pruning, starting from
// the iterative-RANSAC models.
FitResult fit(std::span<const FeatureMatch> matches, const NeighborGraph& graph,
              const EnergyParams& params, std::uint64_t seed);

// Same loop from caller-provided initial models.
FitResult fit_from_models(const ModelSet& initial,
                          std::span<const FeatureMatch> matches,
                          const NeighborGraph& graph,
                          const EnergyParams& params);

}  // namespace parastitch
