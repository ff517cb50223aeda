#pragma once

#include "latticeforge/gen/autodiff.hpp"
#include "latticeforge/symmetry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace latticeforge::gen {

constexpr int kPropertyDim = 9;

/// Linear beta schedule; index 0 is the clean state (alpha_bar_0 = 1).
class NoiseSchedule {
  public:
    explicit NoiseSchedule(int steps = 100, double beta_start = 1e-4, double beta_end = 0.02);

    int steps() const { return steps_; }
    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }
    double beta(int t) const { return beta_[static_cast<std::size_t>(t)]; }
    double alpha(int t) const { return 1.0 - beta(t); }
    double alpha_bar(int t) const { return alpha_bar_[static_cast<std::size_t>(t)]; }

    /// Coefficients of the posterior mean mu = c0 * x0_hat + ct * x_t, and its variance.
    struct Posterior {
        double coef_x0 = 0;
        double coef_xt = 0;
        double variance = 0;
    };
    Posterior posterior(int t) const;

  private:
    int steps_;
    double beta_start_;
    double beta_end_;
    std::vector<double> beta_;       // [0] unused
    std::vector<double> alpha_bar_;  // [0] = 1
};

struct GenConfig {
    int n_max = 32;
    int width = 64;
    int heads = 4;
    int blocks = 4;
    int edge_width = 32;
    double learning_rate = 2e-3;
    int batch_size = 8;
    int epochs = 200;
    /// Augmented copies of each training cell per epoch.
    int repeats = 8;
    double edge_loss_weight = 1.0;
    /// Std of Gaussian jitter on edge-predictor inputs during training, as a
    /// fraction of the frame side. Sampled coordinates are never exact.
    double edge_jitter = 0.02;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;

    void check() const;
};

/// Named dense parameter tensors in a fixed order.
class ParamSet {
  public:
    void add(std::string name, Matrix value);
    std::size_t size() const { return tensors_.size(); }
    const std::string& name(std::size_t i) const { return tensors_[i].first; }
    Matrix& operator[](std::size_t i) { return tensors_[i].second; }
    const Matrix& operator[](std::size_t i) const { return tensors_[i].second; }
    std::size_t index(const std::string& name) const;
    const Matrix& at(const std::string& name) const { return tensors_[index(name)].second; }
    bool all_finite() const;

    friend bool operator==(const ParamSet& a, const ParamSet& b);

  private:
    std::vector<std::pair<std::string, Matrix>> tensors_;
    std::map<std::string, std::size_t> lookup_;
};

/// Shapes every named tensor must have for a configuration.
std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> expected_shapes(const GenConfig& cfg);

/// Everything a model file holds.
struct ModelParams {
    GenConfig config;
    NoiseSchedule schedule;
    ParamSet tensors;
    /// z-score statistics of the training property vectors (1 x 9 each).
    Matrix prop_mean = Matrix::Zero(1, kPropertyDim);
    Matrix prop_std = Matrix::Ones(1, kPropertyDim);
    /// Raw training property vectors (k x 9) and their vertex counts (k x 1),
    /// used to pick a default vertex count at sampling time.
    Matrix reference_props = Matrix::Zero(0, kPropertyDim);
    Matrix reference_counts = Matrix::Zero(0, 1);

    Matrix normalize(const PropertyVector& p) const;
    int default_vertex_count(const PropertyVector& p) const;
};

ModelParams init_model(const GenConfig& cfg, const NoiseSchedule& schedule = NoiseSchedule());

/// Parameters placed on a tape without copying; `leaves[i]` mirrors
/// tensors[i]. The ParamSet must not change while the tape is in use.
struct BoundParams {
    std::vector<Var> leaves;
    const ParamSet* source = nullptr;
    Var operator()(const std::string& name) const;
};
BoundParams bind(Tape& tape, const ParamSet& params, bool trainable = true);

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps on rows where mask is true.
Matrix forward_noise(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& schedule,
                     const std::vector<bool>& mask = {});

std::vector<bool> full_mask(Eigen::Index rows);

/// One point set fed to the denoiser (unmasked rows only).
struct DenoiseInput {
    Matrix x_t;    // n x 3
    int t = 1;
    Matrix props;  // 1 x 9, normalized
};

/// Denoiser graph over several point sets at once. Tokens of all inputs are
/// stacked; attention never crosses between inputs. Returns the stacked
/// (sum n) x 3 prediction.
Var denoiser_graph(const BoundParams& p, const GenConfig& cfg, const NoiseSchedule& schedule,
                   const std::vector<DenoiseInput>& inputs);

/// Clean-coordinate prediction. Masked rows come back as zeros and have no
/// influence on the others.
Matrix predict_x0(const ModelParams& model, const Matrix& x_t, int t, const Matrix& props_normalized,
                  const std::vector<bool>& mask);

/// Symmetrized edge logits for all pairs i < j, in row-major pair order.
Var edge_logit_graph(const BoundParams& p, const Matrix& coords, const Matrix& props_normalized);

/// Symmetric edge probabilities with a zero diagonal.
Matrix predict_edges(const ModelParams& model, const Matrix& coords, const PropertyVector& props);
Matrix predict_edges_normalized(const ModelParams& model, const Matrix& coords,
                                const Matrix& props_normalized);

/// Hard adjacency from probabilities at 0.5.
std::vector<std::pair<std::size_t, std::size_t>> threshold_edges(const Matrix& prob, double cut = 0.5);

/// Ancestral sampling with the x0 parameterization.
Matrix sample(const ModelParams& model, const PropertyVector& props, int n_vertices, std::uint64_t seed);

}  // namespace latticeforge::gen
