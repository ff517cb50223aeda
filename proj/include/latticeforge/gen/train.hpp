#pragma once

#include "latticeforge/core.hpp"
#include "latticeforge/gen/model.hpp"
#include "latticeforge/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace latticeforge::gen {

/// Generation space: unit-frame coordinates centered on the frame center and
/// multiplied by kGenerationScale. The short default schedule keeps
/// sqrt(abar_T) ~ 0.6 of the signal; spreading the points out keeps vertex
/// identities resolvable at higher noise levels. 4 was picked by trial.
constexpr double kGenerationScale = 4.0;
Matrix to_generation_space(const UnitCell& cell);
std::vector<Vec3> from_generation_space(const Matrix& x);

/// Sample coordinates, score edges on them and threshold at 0.5. The result
/// lives in the unit frame.
UnitCell sample_cell(const ModelParams& model, const PropertyVector& props, int n_vertices, std::uint64_t seed,
                     const std::string& name = "generated");

/// One padded training item.
struct TrainExample {
    Matrix x0;                  // n_max x 3, zero past the mask
    Matrix adjacency;           // n_max x n_max, 0/1, symmetric, zero diagonal
    Matrix props;               // 1 x 9, already normalized
    std::vector<bool> mask;     // n_max
    Eigen::Index count() const;
};

TrainExample make_example(const UnitCell& cell, const Matrix& props_normalized, int n_max);

/// Per-example noise draw.
struct NoiseDraw {
    int t = 1;
    Matrix eps;  // count x 3
    /// Offset added to x0 before edge scoring; empty means none.
    Matrix edge_offset;
};

struct StepResult {
    double loss = 0;
    double coord_loss = 0;
    double edge_loss = 0;
    std::vector<Matrix> gradients;  // aligned with ModelParams::tensors
};

/// Loss and gradients for fixed noise draws; exposed for gradient checking.
StepResult evaluate_batch(const ModelParams& model, const std::vector<TrainExample>& batch,
                          const std::vector<NoiseDraw>& draws, bool with_gradients = true);

/// Draws t uniform in [1, T], eps and the edge-input jitter per example.
std::vector<NoiseDraw> draw_noise(const ModelParams& model, const std::vector<TrainExample>& batch, Rng& rng);

/// draw_noise, then evaluate_batch.
StepResult train_step(const ModelParams& model, const std::vector<TrainExample>& batch, Rng& rng);

struct GradCheckReport {
    double worst_error = 0;
    std::string worst_tensor;
    double worst_analytic = 0;
    double worst_numeric = 0;
    std::size_t probes = 0;
};

/// Central differences of the batch loss at `probes_per_tensor` random entries
/// of every tensor, against the analytic gradient. Error per probe is
/// |a - n| / max(|a|, |n|, floor): below `floor` the difference quotient is
/// limited by rounding of the loss, so the comparison becomes absolute.
/// The model is restored before returning.
GradCheckReport gradient_check(ModelParams& model, const std::vector<TrainExample>& batch,
                               const std::vector<NoiseDraw>& draws, double step, int probes_per_tensor,
                               std::uint64_t seed, double floor = 1e-4);

class Adam {
  public:
    explicit Adam(const ParamSet& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(ParamSet& params, const std::vector<Matrix>& grads, double lr);

  private:
    double beta1_, beta2_, eps_;
    long steps_ = 0;
    std::vector<Matrix> m_, v_;
};

/// A clean cell with its raw (unnormalized) property vector.
struct TrainingCell {
    UnitCell cell;
    PropertyVector props{};
};

/// Pairs each cell with its homogenized properties at the given strut radius
/// (unit Young's modulus, Poisson 0.3).
std::vector<TrainingCell> with_properties(const std::vector<UnitCell>& cells, double strut_radius);

struct EpochStats {
    int epoch = 0;
    double coord_loss = 0;
    double edge_loss = 0;
};

struct TrainOptions {
    bool augment = true;
    /// Scale range for augmentation; the result is renormalized into the unit frame.
    double scale_min = 0.8;
    double scale_max = 1.2;
    std::function<void(const EpochStats&)> on_epoch;
};

/// Fits normalization statistics, then runs Adam with a cosine-decayed rate.
/// Fully determined by model.config.seed.
std::vector<EpochStats> train(ModelParams& model, const std::vector<TrainingCell>& cells,
                              const TrainOptions& options = {});

}  // namespace latticeforge::gen
