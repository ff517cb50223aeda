#include "latticeforge/gen/train.hpp"

#include "latticeforge/homogenize.hpp"
#include "latticeforge/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace latticeforge::gen {

Matrix to_generation_space(const UnitCell& cell) {
    const Frame frame = bounding_frame(cell);
    Matrix x(static_cast<Eigen::Index>(cell.vertices.size()), 3);
    for (std::size_t i = 0; i < cell.vertices.size(); ++i) {
        const Vec3 u = (cell.vertices[i] - frame.center) / frame.side;
        x.row(static_cast<Eigen::Index>(i)) = kGenerationScale * u.transpose();
    }
    return x;
}

std::vector<Vec3> from_generation_space(const Matrix& x) {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out.emplace_back(x(r, 0) / kGenerationScale + 0.5, x(r, 1) / kGenerationScale + 0.5, x(r, 2) / kGenerationScale + 0.5);
    }
    return out;
}

UnitCell sample_cell(const ModelParams& model, const PropertyVector& props, int n_vertices, std::uint64_t seed,
                     const std::string& name) {
    const Matrix x = sample(model, props, n_vertices, seed);
    UnitCell cell;
    cell.name = name;
    cell.vertices = from_generation_space(x);
    for (const auto& e : threshold_edges(predict_edges(model, x, props))) cell.edges.push_back(e);
    return cell;
}

std::vector<TrainingCell> with_properties(const std::vector<UnitCell>& cells, double strut_radius) {
    std::vector<TrainingCell> out;
    out.reserve(cells.size());
    for (const UnitCell& c : cells) out.push_back({c, compute_properties(c, StrutSection{strut_radius}).vector()});
    return out;
}

Eigen::Index TrainExample::count() const {
    return static_cast<Eigen::Index>(std::count(mask.begin(), mask.end(), true));
}

TrainExample make_example(const UnitCell& cell, const Matrix& props_normalized, int n_max) {
    const auto n = static_cast<Eigen::Index>(cell.vertices.size());
    if (n < 1 || n > n_max) throw std::invalid_argument("cell '" + cell.name + "' does not fit n_max");
    TrainExample ex;
    ex.x0 = Matrix::Zero(n_max, 3);
    ex.x0.topRows(n) = to_generation_space(cell);
    ex.adjacency = Matrix::Zero(n_max, n_max);
    for (const auto& [i, j] : cell.edges) {
        const auto a = static_cast<Eigen::Index>(i);
        const auto b = static_cast<Eigen::Index>(j);
        ex.adjacency(a, b) = ex.adjacency(b, a) = 1.0;
    }
    ex.props = props_normalized;
    ex.mask.assign(static_cast<std::size_t>(n_max), false);
    std::fill(ex.mask.begin(), ex.mask.begin() + n, true);
    return ex;
}

StepResult evaluate_batch(const ModelParams& model, const std::vector<TrainExample>& batch,
                          const std::vector<NoiseDraw>& draws, bool with_gradients) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (draws.size() != batch.size()) throw std::invalid_argument("one noise draw per example required");
    Tape tape;
    const BoundParams p = bind(tape, model.tensors);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double lambda = model.config.edge_loss_weight;
    std::vector<DenoiseInput> inputs;
    std::vector<Matrix> targets;
    inputs.reserve(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const TrainExample& ex = batch[b];
        const Matrix x0 = ex.x0.topRows(ex.count());
        inputs.push_back({forward_noise(x0, draws[b].t, draws[b].eps, model.schedule), draws[b].t, ex.props});
        targets.push_back(x0);
    }
    const Var pred = denoiser_graph(p, model.config, model.schedule, inputs);
    StepResult res;
    std::vector<Var> terms;
    Eigen::Index row = 0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const TrainExample& ex = batch[b];
        const Eigen::Index n = targets[b].rows();
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = row + i;
        row += n;
        const Var coord = mean_squared_error(gather_rows(pred, rows), targets[b]);
        res.coord_loss += coord.value()(0, 0) * inv_b;
        Var term = coord;
        if (n >= 2) {
            Matrix target(n * (n - 1) / 2, 1);
            Eigen::Index k = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = i + 1; j < n; ++j) target(k++, 0) = ex.adjacency(i, j);
            }
            const Matrix& off = draws[b].edge_offset;
            const Matrix coords = off.size() ? Matrix(targets[b] + off) : targets[b];
            const Var edge = bce_with_logits(edge_logit_graph(p, coords, ex.props), target);
            res.edge_loss += edge.value()(0, 0) * inv_b;
            term = add(term, scale(edge, lambda));
        }
        terms.push_back(scale(term, inv_b));
    }
    Var total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
    res.loss = total.value()(0, 0);
    if (with_gradients) {
        tape.backward(total);
        res.gradients.reserve(p.leaves.size());
        for (const Var& leaf : p.leaves) res.gradients.push_back(tape.take_grad(leaf));
    }
    return res;
}

std::vector<NoiseDraw> draw_noise(const ModelParams& model, const std::vector<TrainExample>& batch, Rng& rng) {
    std::vector<NoiseDraw> draws;
    draws.reserve(batch.size());
    for (const TrainExample& ex : batch) {
        NoiseDraw d;
        d.t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(model.schedule.steps())));
        d.eps.resize(ex.count(), 3);
        for (Eigen::Index i = 0; i < d.eps.size(); ++i) d.eps(i) = rng.normal();
        if (model.config.edge_jitter > 0) {
            const double sd = model.config.edge_jitter * kGenerationScale;
            d.edge_offset.resize(ex.count(), 3);
            for (Eigen::Index i = 0; i < d.edge_offset.size(); ++i) d.edge_offset(i) = sd * rng.normal();
        }
        draws.push_back(std::move(d));
    }
    return draws;
}

StepResult train_step(const ModelParams& model, const std::vector<TrainExample>& batch, Rng& rng) {
    return evaluate_batch(model, batch, draw_noise(model, batch, rng));
}

GradCheckReport gradient_check(ModelParams& model, const std::vector<TrainExample>& batch,
                               const std::vector<NoiseDraw>& draws, double step, int probes_per_tensor,
                               std::uint64_t seed, double floor) {
    const StepResult base = evaluate_batch(model, batch, draws);
    Rng rng(seed);
    GradCheckReport report;
    for (std::size_t i = 0; i < model.tensors.size(); ++i) {
        Matrix& w = model.tensors[i];
        for (int probe = 0; probe < probes_per_tensor; ++probe) {
            const auto k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w.size())));
            const double keep = w(k);
            w(k) = keep + step;
            const double up = evaluate_batch(model, batch, draws, false).loss;
            w(k) = keep - step;
            const double down = evaluate_batch(model, batch, draws, false).loss;
            w(k) = keep;
            const double a = base.gradients[i](k);
            const double n = (up - down) / (2.0 * step);
            const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
            ++report.probes;
            if (err >= report.worst_error) {
                report.worst_error = err;
                report.worst_tensor = model.tensors.name(i);
                report.worst_analytic = a;
                report.worst_numeric = n;
            }
        }
    }
    return report;
}

Adam::Adam(const ParamSet& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_.push_back(Matrix::Zero(params[i].rows(), params[i].cols()));
        v_.push_back(Matrix::Zero(params[i].rows(), params[i].cols()));
    }
}

void Adam::step(ParamSet& params, const std::vector<Matrix>& grads, double lr) {
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseAbs2();
        params[i].array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

namespace {

void fit_statistics(ModelParams& model, const std::vector<TrainingCell>& cells) {
    const auto k = static_cast<Eigen::Index>(cells.size());
    model.reference_props.resize(k, kPropertyDim);
    model.reference_counts.resize(k, 1);
    for (Eigen::Index r = 0; r < k; ++r) {
        const auto& c = cells[static_cast<std::size_t>(r)];
        for (int i = 0; i < kPropertyDim; ++i) {
            const double v = c.props[static_cast<std::size_t>(i)];
            if (!std::isfinite(v)) throw std::invalid_argument("training properties must be finite");
            model.reference_props(r, i) = v;
        }
        model.reference_counts(r, 0) = static_cast<double>(c.cell.vertices.size());
    }
    model.prop_mean = model.reference_props.colwise().mean();
    for (int i = 0; i < kPropertyDim; ++i) {
        const double var = (model.reference_props.col(i).array() - model.prop_mean(0, i)).square().mean();
        const double sd = std::sqrt(var);
        // A constant column carries no information; leave it unscaled.
        model.prop_std(0, i) = sd > 1e-12 * std::max(1.0, std::abs(model.prop_mean(0, i))) ? sd : 1.0;
    }
}

TrainingCell augment(const TrainingCell& src, Rng& rng, const TrainOptions& opt) {
    const auto& rots = cube_rotations();
    const CubeOp& op = rots[static_cast<std::size_t>(rng.below(rots.size()))];
    const double s = rng.uniform(opt.scale_min, opt.scale_max);
    TrainingCell out;
    out.cell = transform_cell(src.cell, CellTransform{op, s}, 1.0).cell;  // radius unused here
    // Back into the unit frame: generation always happens at unit size.
    const Frame f = bounding_frame(out.cell);
    for (Vec3& v : out.cell.vertices) v = (v - f.center) / f.side + Vec3::Constant(0.5);
    out.props = permute_properties(src.props, op);
    return out;
}

}  // namespace

std::vector<EpochStats> train(ModelParams& model, const std::vector<TrainingCell>& cells,
                              const TrainOptions& options) {
    if (cells.empty()) throw std::invalid_argument("no training cells");
    const GenConfig& cfg = model.config;
    fit_statistics(model, cells);
    Rng rng(derive_seed(cfg.seed, 0x7a11));
    Adam adam(model.tensors);
    const std::size_t per_epoch = cells.size() * static_cast<std::size_t>(cfg.repeats);
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t steps_per_epoch = (per_epoch + batch - 1) / batch;
    const double total_steps = static_cast<double>(steps_per_epoch) * std::max(cfg.epochs, 1);
    long step = 0;
    std::vector<EpochStats> history;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<TrainExample> pool;
        pool.reserve(per_epoch);
        for (int rep = 0; rep < cfg.repeats; ++rep) {
            for (const TrainingCell& c : cells) {
                const TrainingCell a = options.augment ? augment(c, rng, options) : c;
                PropertyVector pv = a.props;
                pool.push_back(make_example(a.cell, model.normalize(pv), cfg.n_max));
            }
        }
        for (std::size_t i = pool.size(); i > 1; --i) {
            std::swap(pool[i - 1], pool[static_cast<std::size_t>(rng.below(i))]);
        }
        EpochStats stats;
        stats.epoch = epoch;
        std::size_t used = 0;
        for (std::size_t start = 0; start < pool.size(); start += batch) {
            const std::size_t end = std::min(pool.size(), start + batch);
            std::vector<TrainExample> mb(pool.begin() + static_cast<long>(start), pool.begin() + static_cast<long>(end));
            StepResult r = train_step(model, mb, rng);
            stats.coord_loss += r.coord_loss * static_cast<double>(mb.size());
            stats.edge_loss += r.edge_loss * static_cast<double>(mb.size());
            used += mb.size();
            double norm2 = 0;
            for (const Matrix& g : r.gradients) norm2 += g.squaredNorm();
            const double norm = std::sqrt(norm2);
            if (cfg.grad_clip > 0 && norm > cfg.grad_clip) {
                for (Matrix& g : r.gradients) g *= cfg.grad_clip / norm;
            }
            const double progress = static_cast<double>(step++) / total_steps;
            const double lr = cfg.learning_rate * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
            adam.step(model.tensors, r.gradients, lr);
        }
        stats.coord_loss /= static_cast<double>(used);
        stats.edge_loss /= static_cast<double>(used);
        if (!model.tensors.all_finite()) throw std::runtime_error("training diverged: non-finite parameters");
        history.push_back(stats);
        if (options.on_epoch) options.on_epoch(stats);
    }
    return history;
}

}  // namespace latticeforge::gen
