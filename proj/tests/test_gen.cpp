#include "latticeforge/catalog.hpp"
#include "latticeforge/gen/autodiff.hpp"
#include "latticeforge/gen/model.hpp"
#include "latticeforge/gen/model_io.hpp"
#include "latticeforge/gen/train.hpp"
#include "latticeforge/homogenize.hpp"
#include "latticeforge/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace latticeforge;
using namespace latticeforge::gen;

namespace {

GenConfig small_config(std::uint64_t seed = 1) {
    GenConfig cfg;
    cfg.width = 16;
    cfg.heads = 2;
    cfg.blocks = 1;
    cfg.edge_width = 8;
    cfg.n_max = 24;
    cfg.seed = seed;
    return cfg;
}

Matrix normal_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double s = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = s * rng.normal();
    return m;
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

/// Central-difference check of one scalar function of a matrix.
template <class F>
double op_grad_error(const Matrix& x0, F f) {
    Tape tape;
    Var x = tape.leaf(x0);
    Var y = f(x);
    tape.backward(y);
    const Matrix g = tape.grad(x);
    double worst = 0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
        Matrix xp = x0, xm = x0;
        xp(i) += 1e-5;
        xm(i) -= 1e-5;
        Tape tp, tm;
        const double fp = f(tp.constant(xp)).value()(0, 0);
        const double fm = f(tm.constant(xm)).value()(0, 0);
        worst = std::max(worst, rel_err(g(i), (fp - fm) / 2e-5));
    }
    return worst;
}

/// Weighted sum so every output entry matters.
Var reduce(const Var& y, const Matrix& w) {
    Tape& t = *y.tape;
    Var ww = t.constant(w);
    return matmul(matmul(broadcast_rows(t.constant(Matrix::Ones(1, 1)), 1), t.constant(Matrix::Ones(1, y.rows()))),
                  matmul(hadamard(y, ww), t.constant(Matrix::Ones(y.cols(), 1))));
}

std::vector<TrainExample> small_batch(const ModelParams& m) {
    std::vector<TrainExample> batch;
    for (const char* name : {"octet", "bcc"}) {
        const UnitCell c = catalog::make(name);
        const auto p = compute_properties(c, StrutSection{0.02}).vector();
        batch.push_back(make_example(c, m.normalize(p), m.config.n_max));
    }
    return batch;
}

}  // namespace

TEST_CASE("autodiff ops match finite differences") {
    Rng rng(3);
    const Matrix a = normal_matrix(rng, 4, 5);
    const Matrix w = normal_matrix(rng, 4, 5);
    const Matrix b = normal_matrix(rng, 5, 3);
    const Matrix row = normal_matrix(rng, 1, 5);
    const Matrix targets = (normal_matrix(rng, 4, 5).array() > 0).cast<double>();

    CHECK(op_grad_error(a, [&](Var x) { return reduce(x, w); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return reduce(matmul(x, x.tape->constant(b)), normal_matrix(rng = Rng(4), 4, 3)); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return reduce(silu(x), w); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return reduce(softmax_rows(x), w); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return reduce(abs(x), w); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return reduce(transpose(x), w.transpose()); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return reduce(add_row(x, x.tape->constant(row)), w); }) < 1e-7);
    CHECK(op_grad_error(row, [&](Var x) { return reduce(add_row(x.tape->constant(a), x), w); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) {
              Tape& t = *x.tape;
              return reduce(layer_norm(x, t.constant(row), t.constant(row)), w);
          }) < 1e-6);
    CHECK(op_grad_error(a, [&](Var x) {
              return reduce(hcat({slice_cols(x, 3, 2), slice_cols(x, 0, 3)}), w);
          }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) {
              return reduce(vcat({slice_rows(x, 2, 2), gather_rows(x, {1, 0})}), w);
          }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return mean_squared_error(scale(x, 1.5), w); }) < 1e-7);
    CHECK(op_grad_error(a, [&](Var x) { return bce_with_logits(sub(x, x.tape->constant(w)), targets); }) < 1e-7);

    Tape t;
    Var x = t.constant(w);
    CHECK(mean_squared_error(x, w).value()(0, 0) == 0.0);
    const Matrix sure = (2.0 * targets.array() - 1.0) * 40.0;
    CHECK(bce_with_logits(t.constant(sure), targets).value()(0, 0) < 1e-15);

    Tape other;
    CHECK_THROWS(add(t.constant(a), other.constant(a)));
}

TEST_CASE("noise schedule") {
    const NoiseSchedule s;
    CHECK(s.steps() == 100);
    CHECK(s.alpha_bar(0) == 1.0);
    CHECK(s.beta(1) == doctest::Approx(1e-4));
    CHECK(s.beta(100) == doctest::Approx(0.02));
    for (int t = 1; t <= 100; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    const auto p1 = s.posterior(1);
    CHECK(p1.coef_x0 == doctest::Approx(1.0));
    CHECK(p1.variance == doctest::Approx(0.0));
    for (int t = 2; t <= 100; ++t) {
        const auto p = s.posterior(t);
        CHECK(p.variance > 0.0);
        CHECK(p.variance < s.beta(t));
    }
}

TEST_CASE("forward_noise") {
    const NoiseSchedule s;
    Rng rng(8);
    const Matrix x0 = normal_matrix(rng, 10, 3);
    const Matrix eps = normal_matrix(rng, 10, 3);
    CHECK(forward_noise(x0, 0, eps, s) == x0);
    CHECK(forward_noise(x0, 40, Matrix::Zero(10, 3), s).isApprox(std::sqrt(s.alpha_bar(40)) * x0, 1e-15));
    CHECK_THROWS_AS(forward_noise(x0, 101, eps, s), std::out_of_range);

    std::vector<bool> mask(10, true);
    mask[3] = false;
    const Matrix masked = forward_noise(x0, 50, eps, s, mask);
    CHECK(masked.row(3) == x0.row(3));

    for (int t : {10, 60}) {
        const int n = 100000;
        const Matrix x = normal_matrix(rng, n, 1);
        const Matrix e = normal_matrix(rng, n, 1);
        const Matrix r = forward_noise(x, t, e, s) - std::sqrt(s.alpha_bar(t)) * x;
        const double mean = r.mean();
        const double var = (r.array() - mean).square().sum() / (n - 1);
        CAPTURE(t);
        CHECK(var == doctest::Approx(1.0 - s.alpha_bar(t)).epsilon(0.02));
    }
}

TEST_CASE("parameter shapes and init") {
    const GenConfig cfg;
    const ModelParams m = init_model(cfg);
    const auto shapes = expected_shapes(cfg);
    REQUIRE(m.tensors.size() == shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        CHECK(m.tensors.name(i) == shapes[i].first);
        CHECK(m.tensors[i].rows() == shapes[i].second.first);
        CHECK(m.tensors[i].cols() == shapes[i].second.second);
    }
    CHECK(m.tensors.at("block0.cond.query.w").rows() == kPropertyDim);
    CHECK(m.tensors.at("edge_head.w").rows() == 3 * cfg.edge_width);
    CHECK(m.tensors.all_finite());
    CHECK(init_model(cfg).tensors == m.tensors);
    GenConfig other = cfg;
    other.seed = 99;
    CHECK_FALSE(init_model(other).tensors == m.tensors);
    GenConfig bad = cfg;
    bad.heads = 5;
    CHECK_THROWS(init_model(bad));
}

TEST_CASE("denoiser shape, permutation equivariance and masking") {
    const ModelParams m = init_model(small_config(4));
    Rng rng(12);
    const Matrix props = normal_matrix(rng, 1, kPropertyDim);
    const int n = 9;
    const Matrix x = normal_matrix(rng, n, 3, 2.0);

    const Matrix out = predict_x0(m, x, 37, props, full_mask(n));
    CHECK(out.rows() == n);
    CHECK(out.cols() == 3);

    std::vector<Eigen::Index> perm{4, 0, 8, 2, 7, 1, 6, 3, 5};
    Matrix xp(n, 3);
    for (int i = 0; i < n; ++i) xp.row(i) = x.row(perm[i]);
    const Matrix outp = predict_x0(m, xp, 37, props, full_mask(n));
    double worst = 0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, (outp.row(i) - out.row(perm[i])).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-10);

    // Padding to n_max with masked rows leaves the real rows alone.
    Matrix padded = Matrix::Zero(m.config.n_max, 3);
    padded.topRows(n) = x;
    std::vector<bool> mask(m.config.n_max, false);
    for (int i = 0; i < n; ++i) mask[i] = true;
    const Matrix a = predict_x0(m, padded, 37, props, mask);
    padded.bottomRows(m.config.n_max - n) = normal_matrix(rng, m.config.n_max - n, 3, 5.0);
    const Matrix b = predict_x0(m, padded, 37, props, mask);
    CHECK(a.topRows(n) == b.topRows(n));
    CHECK((a.topRows(n) - out).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(b.bottomRows(m.config.n_max - n).isZero());
}

TEST_CASE("stacked sets do not interact") {
    const ModelParams m = init_model(small_config(6));
    Rng rng(2);
    const Matrix props = normal_matrix(rng, 1, kPropertyDim);
    const Matrix x1 = normal_matrix(rng, 5, 3), x2 = normal_matrix(rng, 7, 3);
    Tape tape;
    const BoundParams p = bind(tape, m.tensors, false);
    const Matrix both = denoiser_graph(p, m.config, m.schedule, {{x1, 10, props}, {x2, 80, props}}).value();
    CHECK((both.topRows(5) - predict_x0(m, x1, 10, props, full_mask(5))).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((both.bottomRows(7) - predict_x0(m, x2, 80, props, full_mask(7))).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("full-model gradient check") {
    ModelParams m = init_model(GenConfig{});
    const auto batch = small_batch(m);
    Rng rng(21);
    const auto draws = draw_noise(m, batch, rng);
    const ParamSet before = m.tensors;
    const GradCheckReport r = gradient_check(m, batch, draws, 1e-5, 3, 5);
    MESSAGE("worst error " << r.worst_error << " in " << r.worst_tensor << " (" << r.worst_analytic << " vs "
                           << r.worst_numeric << ")");
    CHECK(r.probes == 3 * m.tensors.size());
    CHECK(r.worst_error <= 1e-5);
    CHECK(m.tensors == before);
    // fixed draws give a fixed loss
    CHECK(evaluate_batch(m, batch, draws, false).loss == evaluate_batch(m, batch, draws, false).loss);
}

TEST_CASE("edge predictor") {
    const ModelParams m = init_model(small_config(9));
    Rng rng(1);
    const Matrix x = normal_matrix(rng, 11, 3);
    const PropertyVector p{1, 1, 1, 1, 1, 1, 0.3, 0.3, 0.3};
    const Matrix prob = predict_edges(m, x, p);
    CHECK(prob.rows() == 11);
    CHECK(prob == prob.transpose());
    CHECK(prob.diagonal().isZero());
    CHECK((prob.array() >= 0).all());
    CHECK((prob.array() <= 1).all());
    Matrix sure = Matrix::Zero(3, 3);
    sure(0, 2) = sure(2, 0) = 0.9;
    sure(0, 1) = sure(1, 0) = 0.4;
    CHECK(threshold_edges(sure) == std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}});
}

TEST_CASE("sampling") {
    const ModelParams m = init_model(small_config(10));
    const PropertyVector p{1, 1, 1, 1, 1, 1, 0.3, 0.3, 0.3};
    const Matrix a = sample(m, p, 14, 5);
    CHECK(a.rows() == 14);
    CHECK(a.cols() == 3);
    CHECK(a.allFinite());
    CHECK(sample(m, p, 14, 5) == a);
    CHECK_FALSE(sample(m, p, 14, 6) == a);
    CHECK_THROWS(sample(m, p, 0, 5));
    CHECK_THROWS(sample(m, p, m.config.n_max + 1, 5));
    const UnitCell c = sample_cell(m, p, 14, 5);
    CHECK(c.num_vertices() == 14);
    CHECK_NOTHROW(c.check());
}

TEST_CASE("generation space round trip") {
    const UnitCell oct = catalog::make("octet");
    const Matrix x = to_generation_space(oct);
    CHECK(x.colwise().mean().norm() < 1e-12);
    CHECK(x.cwiseAbs().maxCoeff() == doctest::Approx(0.5 * kGenerationScale));
    const auto back = from_generation_space(x);
    for (std::size_t i = 0; i < back.size(); ++i) CHECK((back[i] - oct.vertices[i]).norm() < 1e-12);
}

TEST_CASE("training is deterministic and lowers the loss") {
    GenConfig cfg = small_config(13);
    cfg.epochs = 30;
    cfg.repeats = 2;
    cfg.batch_size = 4;
    std::vector<UnitCell> cells{catalog::make("octet"), catalog::make("bcc"), catalog::make("simple_cubic")};
    const auto data = with_properties(cells, 0.02);
    ModelParams a = init_model(cfg), b = init_model(cfg);
    const auto ha = train(a, data);
    const auto hb = train(b, data);
    REQUIRE(ha.size() == 30);
    CHECK(a.tensors == b.tensors);
    CHECK(serialize_model(a) == serialize_model(b));
    CHECK(ha.back().coord_loss < ha.front().coord_loss);
    CHECK(ha.back().edge_loss < ha.front().edge_loss);
    CHECK(a.reference_props.rows() == 3);
    CHECK(a.default_vertex_count(data[0].props) == 14);
    CHECK(a.default_vertex_count(data[1].props) == 9);
}

TEST_CASE("adam moves against the gradient") {
    ParamSet ps;
    ps.add("w", Matrix::Constant(2, 2, 1.0));
    Adam adam(ps);
    adam.step(ps, {Matrix::Constant(2, 2, 3.0)}, 0.1);
    CHECK(ps[0](0, 0) == doctest::Approx(0.9));
}

TEST_CASE("model files") {
    lf_test::TempDir dir("model");
    GenConfig cfg = small_config(14);
    cfg.epochs = 2;
    ModelParams m = init_model(cfg);
    train(m, with_properties({catalog::make("octet"), catalog::make("kelvin")}, 0.02));

    const std::string path = dir.file("m.lfm");
    save_model(m, path);
    const ModelParams back = load_model(path);
    CHECK(back.tensors == m.tensors);
    CHECK(back.prop_mean == m.prop_mean);
    CHECK(back.prop_std == m.prop_std);
    CHECK(back.reference_props == m.reference_props);
    CHECK(back.reference_counts == m.reference_counts);
    CHECK(back.config.edge_jitter == m.config.edge_jitter);
    CHECK(serialize_model(back) == serialize_model(m));
    const PropertyVector p{1, 1, 1, 1, 1, 1, 0.3, 0.3, 0.3};
    CHECK(sample(back, p, 10, 3) == sample(m, p, 10, 3));

    const std::string bytes = serialize_model(m);
    auto message = [](const std::string& data) {
        try {
            deserialize_model(data);
        } catch (const ModelFileError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message(bytes.substr(0, bytes.size() - 100)).starts_with("corrupt file"));
    std::string flipped = bytes;
    flipped[flipped.size() - 5] ^= 0x10;
    CHECK(message(flipped).starts_with("corrupt file"));
    std::string versioned = bytes;
    versioned.replace(versioned.find("version 1"), 9, "version 7");
    CHECK(message(versioned).starts_with("version mismatch"));
    std::string reshaped = bytes;
    const std::string from = "\"name\":\"final_ln.g\",\"rows\":1";
    const auto at = reshaped.find(from);
    REQUIRE(at != std::string::npos);
    reshaped.replace(at, from.size(), "\"name\":\"final_ln.g\",\"rows\":2");
    CHECK(message(reshaped).starts_with("shape mismatch"));
    CHECK(message("hello").starts_with("corrupt file"));
    CHECK_THROWS_AS(load_model(dir.file("missing.lfm")), ModelFileError);
}
