#include "latticeforge/gen/model.hpp"

#include "latticeforge/rng.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace latticeforge::gen {

NoiseSchedule::NoiseSchedule(int steps, double beta_start, double beta_end)
    : steps_(steps), beta_start_(beta_start), beta_end_(beta_end) {
    if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
    if (!(beta_start > 0 && beta_end < 1 && beta_start <= beta_end)) {
        throw std::invalid_argument("betas must satisfy 0 < start <= end < 1");
    }
    beta_.assign(static_cast<std::size_t>(steps) + 1, 0.0);
    alpha_bar_.assign(static_cast<std::size_t>(steps) + 1, 1.0);
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
        beta_[static_cast<std::size_t>(t)] = beta_start + frac * (beta_end - beta_start);
        alpha_bar_[static_cast<std::size_t>(t)] = alpha_bar_[static_cast<std::size_t>(t) - 1] * (1.0 - beta(t));
    }
}

NoiseSchedule::Posterior NoiseSchedule::posterior(int t) const {
    const double ab = alpha_bar(t);
    const double ab_prev = alpha_bar(t - 1);
    Posterior p;
    p.coef_x0 = std::sqrt(ab_prev) * beta(t) / (1.0 - ab);
    p.coef_xt = std::sqrt(alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
    p.variance = (1.0 - ab_prev) / (1.0 - ab) * beta(t);
    return p;
}

void GenConfig::check() const {
    if (width <= 0 || heads <= 0 || width % heads != 0) {
        throw std::invalid_argument("token width must be a positive multiple of the head count");
    }
    if (n_max < 24) throw std::invalid_argument("n_max must hold the largest catalog cell (24)");
    if (blocks < 1 || edge_width < 1) throw std::invalid_argument("blocks and edge width must be positive");
    if (!(edge_jitter >= 0)) throw std::invalid_argument("edge jitter must be non-negative");
    if (batch_size < 1 || repeats < 1 || epochs < 0) throw std::invalid_argument("bad training schedule");
}

void ParamSet::add(std::string name, Matrix value) {
    lookup_[name] = tensors_.size();
    tensors_.emplace_back(std::move(name), std::move(value));
}

std::size_t ParamSet::index(const std::string& name) const {
    auto it = lookup_.find(name);
    if (it == lookup_.end()) throw std::out_of_range("no parameter named '" + name + "'");
    return it->second;
}

bool ParamSet::all_finite() const {
    for (const auto& [n, m] : tensors_) {
        if (!m.allFinite()) return false;
    }
    return true;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.tensors_.size() != b.tensors_.size()) return false;
    for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
        const auto& [na, ma] = a.tensors_[i];
        const auto& [nb, mb] = b.tensors_[i];
        if (na != nb || ma.rows() != mb.rows() || ma.cols() != mb.cols()) return false;
        if (std::memcmp(ma.data(), mb.data(), sizeof(double) * static_cast<std::size_t>(ma.size())) != 0) {
            return false;
        }
    }
    return true;
}

std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> expected_shapes(const GenConfig& cfg) {
    const Eigen::Index d = cfg.width;
    const Eigen::Index de = cfg.edge_width;
    std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> s;
    auto add = [&](std::string n, Eigen::Index r, Eigen::Index c) { s.push_back({std::move(n), {r, c}}); };
    add("coord_embed.w", 3, d);
    add("coord_embed.b", 1, d);
    add("time_proj.w", d, d);
    add("time_proj.b", 1, d);
    for (int b = 0; b < cfg.blocks; ++b) {
        const std::string p = "block" + std::to_string(b) + ".";
        add(p + "ln1.g", 1, d);
        add(p + "ln1.b", 1, d);
        add(p + "attn.q", d, d);
        add(p + "attn.k", d, d);
        add(p + "attn.v", d, d);
        add(p + "attn.out.w", d, d);
        add(p + "attn.out.b", 1, d);
        add(p + "ln2.g", 1, d);
        add(p + "ln2.b", 1, d);
        add(p + "cond.query.w", kPropertyDim, d);
        add(p + "cond.query.b", 1, d);
        add(p + "cond.k", d, d);
        add(p + "cond.v", d, d);
        add(p + "cond.out.w", d, d);
        add(p + "cond.out.b", 1, d);
        add(p + "ln3.g", 1, d);
        add(p + "ln3.b", 1, d);
        add(p + "ffn.w1", d, 4 * d);
        add(p + "ffn.b1", 1, 4 * d);
        add(p + "ffn.w2", 4 * d, d);
        add(p + "ffn.b2", 1, d);
    }
    add("final_ln.g", 1, d);
    add("final_ln.b", 1, d);
    add("coord_head.w", d, 3);
    add("coord_head.b", 1, 3);
    add("edge_enc.w1", 3 + kPropertyDim, de);
    add("edge_enc.b1", 1, de);
    add("edge_enc.w2", de, de);
    add("edge_enc.b2", 1, de);
    add("edge_head.w", 3 * de, 1);
    add("edge_head.b", 1, 1);
    return s;
}

Matrix ModelParams::normalize(const PropertyVector& p) const {
    Matrix out(1, kPropertyDim);
    for (int i = 0; i < kPropertyDim; ++i) {
        if (!std::isfinite(p[static_cast<std::size_t>(i)])) {
            throw std::invalid_argument("property vector has non-finite entries");
        }
        out(0, i) = (p[static_cast<std::size_t>(i)] - prop_mean(0, i)) / prop_std(0, i);
    }
    return out;
}

int ModelParams::default_vertex_count(const PropertyVector& p) const {
    if (reference_props.rows() == 0) return 0;
    const Matrix z = normalize(p);
    double best = std::numeric_limits<double>::infinity();
    int count = 0;
    for (Eigen::Index r = 0; r < reference_props.rows(); ++r) {
        PropertyVector ref{};
        for (int i = 0; i < kPropertyDim; ++i) ref[static_cast<std::size_t>(i)] = reference_props(r, i);
        const double d = (normalize(ref) - z).squaredNorm();
        if (d < best) {
            best = d;
            count = static_cast<int>(reference_counts(r, 0));
        }
    }
    return count;
}

ModelParams init_model(const GenConfig& cfg, const NoiseSchedule& schedule) {
    cfg.check();
    ModelParams m{cfg, schedule, {}, Matrix::Zero(1, kPropertyDim), Matrix::Ones(1, kPropertyDim),
                  Matrix::Zero(0, kPropertyDim), Matrix::Zero(0, 1)};
    Rng rng(derive_seed(cfg.seed, 0x1417));
    for (const auto& [name, shape] : expected_shapes(cfg)) {
        const auto [r, c] = shape;
        Matrix w(r, c);
        const bool is_gain = name.size() > 2 && name.ends_with(".g");
        const bool is_bias = r == 1 && !is_gain;
        if (is_gain) {
            w.setOnes();
        } else if (is_bias) {
            w.setZero();
        } else {
            double stdev = 1.0 / std::sqrt(static_cast<double>(r));
            if (name == "coord_head.w" || name.ends_with("out.w") || name.ends_with("ffn.w2")) stdev *= 0.5;
            for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = stdev * rng.normal();
        }
        m.tensors.add(name, std::move(w));
    }
    return m;
}

Var BoundParams::operator()(const std::string& name) const { return leaves[source->index(name)]; }

BoundParams bind(Tape& tape, const ParamSet& params, bool trainable) {
    BoundParams b;
    b.source = &params;
    b.leaves.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) b.leaves.push_back(tape.borrow(params[i], trainable));
    return b;
}

std::vector<bool> full_mask(Eigen::Index rows) { return std::vector<bool>(static_cast<std::size_t>(rows), true); }

Matrix forward_noise(const Matrix& x0, int t, const Matrix& eps, const NoiseSchedule& schedule,
                     const std::vector<bool>& mask) {
    if (t < 0 || t > schedule.steps()) throw std::out_of_range("timestep out of range");
    if (eps.rows() != x0.rows() || eps.cols() != x0.cols()) throw std::invalid_argument("noise shape mismatch");
    const double a = std::sqrt(schedule.alpha_bar(t));
    const double s = std::sqrt(1.0 - schedule.alpha_bar(t));
    Matrix out = x0;
    for (Eigen::Index r = 0; r < x0.rows(); ++r) {
        if (!mask.empty() && !mask[static_cast<std::size_t>(r)]) continue;
        out.row(r) = a * x0.row(r) + s * eps.row(r);
    }
    return out;
}

namespace {

Matrix timestep_features(int t, int width) {
    Matrix f(1, width);
    const int half = width / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        f(0, i) = std::sin(t * freq);
        f(0, half + i) = std::cos(t * freq);
    }
    if (width % 2) f(0, width - 1) = 0.0;
    return f;
}

/// Scaled dot-product attention split over heads.
Var multihead(const Var& q, const Var& k, const Var& v, int heads) {
    const Eigen::Index dh = q.cols() / heads;
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> outs;
    for (int h = 0; h < heads; ++h) {
        const Var qh = slice_cols(q, h * dh, dh);
        const Var kh = slice_cols(k, h * dh, dh);
        const Var vh = slice_cols(v, h * dh, dh);
        const Var weights = softmax_rows(scale(matmul(qh, transpose(kh)), inv));
        outs.push_back(matmul(weights, vh));
    }
    return hcat(outs);
}

/// Row ranges of the stacked token matrix, one per input set.
struct Segments {
    std::vector<Eigen::Index> start;
    std::vector<Eigen::Index> count;
    std::size_t size() const { return start.size(); }
};

/// Attention applied independently within each segment. Queries are either
/// per token (same segmentation as keys) or one row per segment.
Var segmented_attention(const Var& q, const Var& k, const Var& v, const Segments& seg, bool query_per_segment,
                        int heads) {
    if (seg.size() == 1) return multihead(q, k, v, heads);
    std::vector<Var> parts;
    parts.reserve(seg.size());
    for (std::size_t s = 0; s < seg.size(); ++s) {
        const Var qs = query_per_segment ? slice_rows(q, static_cast<Eigen::Index>(s), 1)
                                         : slice_rows(q, seg.start[s], seg.count[s]);
        parts.push_back(multihead(qs, slice_rows(k, seg.start[s], seg.count[s]),
                                  slice_rows(v, seg.start[s], seg.count[s]), heads));
    }
    return vcat(parts);
}

std::pair<Matrix, std::vector<Eigen::Index>> compact_rows(const Matrix& x, const std::vector<bool>& mask) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (mask.empty() || mask[static_cast<std::size_t>(r)]) keep.push_back(r);
    }
    Matrix out(static_cast<Eigen::Index>(keep.size()), x.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(keep[k]);
    return {out, keep};
}

}  // namespace

Var denoiser_graph(const BoundParams& p, const GenConfig& cfg, const NoiseSchedule& schedule,
                   const std::vector<DenoiseInput>& inputs) {
    if (inputs.empty()) throw std::invalid_argument("denoiser needs at least one input");
    Tape& tape = *p.leaves.front().tape;
    const auto batch = static_cast<Eigen::Index>(inputs.size());
    Eigen::Index total = 0;
    for (const auto& in : inputs) total += in.x_t.rows();

    Matrix x(total, 3);
    Matrix times(batch, cfg.width);
    Matrix props(batch, kPropertyDim);
    std::vector<Eigen::Index> owner;
    owner.reserve(static_cast<std::size_t>(total));
    Segments seg;
    Eigen::Index row = 0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        const DenoiseInput& in = inputs[static_cast<std::size_t>(b)];
        const Eigen::Index n = in.x_t.rows();
        if (in.t < 1 || in.t > schedule.steps()) throw std::out_of_range("timestep out of range");
        x.middleRows(row, n) = in.x_t;
        times.row(b) = timestep_features(in.t, cfg.width);
        props.row(b) = in.props;
        seg.start.push_back(row);
        seg.count.push_back(n);
        for (Eigen::Index i = 0; i < n; ++i) owner.push_back(b);
        row += n;
    }
    const Var pv = tape.constant(std::move(props));
    const Var temb = add_row(matmul(tape.constant(std::move(times)), p("time_proj.w")), p("time_proj.b"));
    Var h = add(add_row(matmul(tape.constant(std::move(x)), p("coord_embed.w")), p("coord_embed.b")),
                gather_rows(temb, owner));
    for (int b = 0; b < cfg.blocks; ++b) {
        const std::string pre = "block" + std::to_string(b) + ".";
        // Self-attention across vertex tokens.
        const Var a = layer_norm(h, p(pre + "ln1.g"), p(pre + "ln1.b"));
        const Var att = segmented_attention(matmul(a, p(pre + "attn.q")), matmul(a, p(pre + "attn.k")),
                                  matmul(a, p(pre + "attn.v")), seg, false, cfg.heads);
        h = add(h, add_row(matmul(att, p(pre + "attn.out.w")), p(pre + "attn.out.b")));
        // Property query attends over the token stream; its single output
        // slot is added to every token of the same set.
        const Var c = layer_norm(h, p(pre + "ln2.g"), p(pre + "ln2.b"));
        const Var query = add_row(matmul(pv, p(pre + "cond.query.w")), p(pre + "cond.query.b"));
        const Var ctx = segmented_attention(query, matmul(c, p(pre + "cond.k")), matmul(c, p(pre + "cond.v")), seg,
                                            true, cfg.heads);
        const Var cond = add_row(matmul(ctx, p(pre + "cond.out.w")), p(pre + "cond.out.b"));
        h = add(h, gather_rows(cond, owner));
        // Feed-forward.
        const Var f = layer_norm(h, p(pre + "ln3.g"), p(pre + "ln3.b"));
        const Var hidden = silu(add_row(matmul(f, p(pre + "ffn.w1")), p(pre + "ffn.b1")));
        h = add(h, add_row(matmul(hidden, p(pre + "ffn.w2")), p(pre + "ffn.b2")));
    }
    const Var out = layer_norm(h, p("final_ln.g"), p("final_ln.b"));
    return add_row(matmul(out, p("coord_head.w")), p("coord_head.b"));
}

Matrix predict_x0(const ModelParams& model, const Matrix& x_t, int t, const Matrix& props_normalized,
                  const std::vector<bool>& mask) {
    if (!props_normalized.allFinite()) throw std::invalid_argument("property vector has non-finite entries");
    if (!mask.empty() && mask.size() != static_cast<std::size_t>(x_t.rows())) {
        throw std::invalid_argument("mask length differs from vertex count");
    }
    auto [rows, keep] = compact_rows(x_t, mask);
    Matrix out = Matrix::Zero(x_t.rows(), 3);
    if (keep.empty()) return out;
    Tape tape;
    const BoundParams p = bind(tape, model.tensors, false);
    const Var pred = denoiser_graph(p, model.config, model.schedule, {DenoiseInput{rows, t, props_normalized}});
    for (std::size_t k = 0; k < keep.size(); ++k) out.row(keep[k]) = pred.value().row(static_cast<Eigen::Index>(k));
    return out;
}

Var edge_logit_graph(const BoundParams& p, const Matrix& coords, const Matrix& props_normalized) {
    Tape& tape = *p.leaves.front().tape;
    const Eigen::Index n = coords.rows();
    const Var input = hcat({tape.constant(coords), broadcast_rows(tape.constant(props_normalized), n)});
    const Var h1 = silu(add_row(matmul(input, p("edge_enc.w1")), p("edge_enc.b1")));
    const Var h = add_row(matmul(h1, p("edge_enc.w2")), p("edge_enc.b2"));
    std::vector<Eigen::Index> first;
    std::vector<Eigen::Index> second;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            first.push_back(i);
            second.push_back(j);
        }
    }
    const Var hi = gather_rows(h, first);
    const Var hj = gather_rows(h, second);
    const Var gap = abs(sub(hi, hj));
    const Var forward = add_row(matmul(hcat({hi, hj, gap}), p("edge_head.w")), p("edge_head.b"));
    const Var reverse = add_row(matmul(hcat({hj, hi, gap}), p("edge_head.w")), p("edge_head.b"));
    return scale(add(forward, reverse), 0.5);
}

Matrix predict_edges_normalized(const ModelParams& model, const Matrix& coords, const Matrix& props_normalized) {
    const Eigen::Index n = coords.rows();
    Matrix prob = Matrix::Zero(n, n);
    if (n < 2) return prob;
    Tape tape;
    const BoundParams p = bind(tape, model.tensors, false);
    const Matrix logits = edge_logit_graph(p, coords, props_normalized).value();
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
            const double z = logits(k, 0);
            const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            prob(i, j) = prob(j, i) = s;
        }
    }
    return prob;
}

Matrix predict_edges(const ModelParams& model, const Matrix& coords, const PropertyVector& props) {
    return predict_edges_normalized(model, coords, model.normalize(props));
}

std::vector<std::pair<std::size_t, std::size_t>> threshold_edges(const Matrix& prob, double cut) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (Eigen::Index i = 0; i < prob.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < prob.cols(); ++j) {
            if (prob(i, j) > cut) out.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    return out;
}

Matrix sample(const ModelParams& model, const PropertyVector& props, int n_vertices, std::uint64_t seed) {
    if (n_vertices < 1 || n_vertices > model.config.n_max) {
        throw std::out_of_range("vertex count must lie in [1, n_max]");
    }
    const Matrix z = model.normalize(props);
    const auto& sched = model.schedule;
    Rng rng(seed);
    Matrix x(n_vertices, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    const auto mask = full_mask(n_vertices);
    for (int t = sched.steps(); t >= 1; --t) {
        const Matrix x0_hat = predict_x0(model, x, t, z, mask);
        const auto post = sched.posterior(t);
        Matrix next = post.coef_x0 * x0_hat + post.coef_xt * x;
        if (t > 1) {
            const double sd = std::sqrt(post.variance);
            for (Eigen::Index i = 0; i < next.size(); ++i) next(i) += sd * rng.normal();
        }
        x = std::move(next);
    }
    return x;
}

}  // namespace latticeforge::gen
