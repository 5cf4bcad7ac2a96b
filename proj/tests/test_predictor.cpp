#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "helpers.hpp"
#include "ntnpred/channel.hpp"
#include "ntnpred/checkpoint.hpp"
#include "ntnpred/predictor.hpp"

using namespace ntnpred;
using test::check_gradient;
using test::random_tensor;

namespace {

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.validation_size = 8;
    cfg.max_epochs = 3;
    return cfg;
}

/// Reproduces the per-sample stream of make_dataset to recover the full burst CFR.
CMatrix burst_truth(const TrainConfig& cfg, Stream stream, std::uint64_t index, std::size_t i, bool drew_eb) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(stream), index), Stream::Misc, i);
    if (drew_eb) rng.below(cfg.eb_n0_grid_db.size());
    const auto profile = load_profile(cfg.channel_profile, default_profile_path(), cfg.delay_spread_s);
    return draw_burst_cfr(profile, doppler_from_speed(cfg.ue_speed_kmh, cfg.carrier_hz),
                          CfoProcess::default_sigma(cfg.carrier_hz), 48, 28, rng)
        .entries;
}

CMatrix random_cfr(Rng& rng) {
    CMatrix m(48, 14);
    for (auto& v : m.values()) v = cplx(rng.normal(), rng.normal());
    return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape() == b.shape());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_SUITE("predictor") {

TEST_CASE("architecture and shape chain") {
    PredictorModel model(1);
    CHECK(model.parameter_count() == 5806);
    REQUIRE(model.architecture().size() == 7);
    CHECK(model.architecture() == default_architecture());

    PredictorModel::Cache c;
    const Tensor x = random_tensor({48, 14, 2}, 2);
    const Tensor y = model.forward(x, BnMode::Infer, &c);
    CHECK(y.shape() == Shape{48, 14, 2});
    CHECK(c.a1.shape() == Shape{1, 4, 14, 8});
    CHECK(c.seq.shape() == Shape{1, 14, 32});
    CHECK(c.h4.shape() == Shape{1, 1, 14, 16});
    CHECK(c.sb.shape() == Shape{1, 4, 14, 8});
    CHECK(c.u1.shape() == Shape{1, 4, 14, 8});
    CHECK(c.d2.shape() == Shape{1, 48, 14, 2});
    CHECK_THROWS_AS(model.infer(Tensor({48, 12, 2})), UsageError);
    CHECK_THROWS_AS(model.predict(CMatrix(48, 12)), UsageError);
}

TEST_CASE("zero input gives zero output on a fresh model") {
    const PredictorModel model(3);
    const Tensor y = model.infer(Tensor({2, 48, 14, 2}));
    for (double v : y.values()) CHECK(v == 0.0);
    const auto p = model.predict(CMatrix(48, 14));
    for (const auto& v : p.values()) CHECK(v == cplx(0.0));
}

TEST_CASE("prediction scales with the input") {
    const PredictorModel model(4);
    Rng rng(5);
    const CMatrix h = random_cfr(rng);
    CMatrix h3 = h;
    for (auto& v : h3.values()) v *= 3.5;
    const auto a = model.predict(h), b = model.predict(h3);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(b.values()[i] - 3.5 * a.values()[i]) < 1e-12);
}

TEST_CASE("inference is deterministic and batch-independent") {
    const PredictorModel model(6);
    Rng rng(7);
    const std::vector<CMatrix> in{random_cfr(rng), random_cfr(rng), random_cfr(rng)};
    const auto batch = model.predict_batch(in);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto one = model.predict(in[i]);
        CHECK(one.values() == model.predict(in[i]).values());
        for (std::size_t j = 0; j < one.size(); ++j) CHECK(std::abs(one.values()[j] - batch[i].values()[j]) < 1e-12);
    }
    const ChannelEstimate est{in[0], EstimateSource::DataAidedLS, {}};
    const auto pred = predict_slot(model, est);
    CHECK(pred.source == EstimateSource::Predicted);
    CHECK(pred.entries.values() == model.predict(in[0]).values());
}

TEST_CASE("stacking normalizes to unit mean square") {
    Rng rng(8);
    const CMatrix h = random_cfr(rng);
    const double s = norm_scale(h);
    const Tensor t = stack_complex(h, s);
    CHECK(dot(t, t) / double(t.size()) == doctest::Approx(1.0).epsilon(1e-12));
    const CMatrix back = unstack_complex(t, s);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::abs(back.values()[i] - h.values()[i]) < 1e-12);
}

TEST_CASE("loss equals NMSE under the shared scale") {
    const auto samples = make_dataset(small_config(), 4, Stream::HeldOut, 0);
    for (const auto& s : samples) {
        CHECK(s.norm_scale > 0.0);
        const double loss =
            mse_loss(stack_complex(s.input_estimate, s.norm_scale), stack_complex(s.target_truth, s.norm_scale));
        const double direct = squared_error(s.input_estimate, s.target_truth) / s.input_estimate.frobenius_sq();
        CHECK(std::abs(loss - direct) < 1e-12);
    }
    const NmseSummary sum = evaluate_nmse(PredictorModel(9), samples);
    CHECK(sum.samples == 4);
    double persist = 0.0;
    for (const auto& s : samples) persist += nmse(s.input_estimate, s.target_truth);
    CHECK(sum.persistence == doctest::Approx(persist / 4).epsilon(1e-12));
}

TEST_CASE("dataset seeding and noiseless estimates") {
    const TrainConfig cfg = small_config();
    const auto a = make_dataset(cfg, 3, Stream::TrainData, 0);
    const auto a2 = make_dataset(cfg, 3, Stream::TrainData, 0);
    const auto b = make_dataset(cfg, 3, Stream::TrainData, 1);
    const auto v = make_dataset(cfg, 3, Stream::ValidationData, 0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i].input_estimate.values() == a2[i].input_estimate.values());
        CHECK(a[i].target_truth.values() != b[i].target_truth.values());
        CHECK(a[i].target_truth.values() != v[i].target_truth.values());
        bool on_grid = false;
        for (double g : cfg.eb_n0_grid_db) on_grid |= a[i].eb_n0_db == g;
        CHECK(on_grid);
    }

    const double inf = std::numeric_limits<double>::infinity();
    const auto clean = make_dataset(cfg, 3, Stream::HeldOut, 2, inf);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const CMatrix h = burst_truth(cfg, Stream::HeldOut, 2, i, false);
        CHECK(nmse(clean[i].input_estimate, h.columns(0, 14)) < 1e-18);
        CHECK(clean[i].target_truth.values() == h.columns(14, 14).values());
    }
}

TEST_CASE("whole-model gradient matches finite differences") {
    PredictorModel model(10);
    const Tensor x = random_tensor({2, 48, 14, 2}, 11);
    const Tensor r = random_tensor({2, 48, 14, 2}, 12);
    auto loss = [&] { return dot(model.forward(x, BnMode::Train), r); };
    model.params().zero_grad();
    PredictorModel::Cache cache;
    model.forward(x, BnMode::Train, &cache);
    model.backward(r, cache);
    for (auto& g : model.params().groups())
        for (std::size_t i = 0; i < g.tensors.size(); ++i) {
            CAPTURE(g.layer);
            CAPTURE(g.names[i]);
            Tensor& p = g.tensors[i];
            const std::vector<double> an(p.grad().begin(), p.grad().end());
            const auto res = check_gradient(p, an, loss, 24);
            CHECK(res.failed == 0);
        }
}

TEST_CASE("TimeFlip placements differ only by time reindexing") {
    const Tensor x = random_tensor({2, 48, 14, 2}, 13);
    PredictorModel back(14, FlipPlacement::FlipBackAtOutput), before(14, FlipPlacement::FlipBeforeLstm),
        unflip(14, FlipPlacement::UnflipAfterLstm), none(14, FlipPlacement::NoFlip);
    CHECK(max_abs_diff(back.infer(x), time_flip(before.infer(x))) == 0.0);

    PredictorModel::Cache cb, cu, cn;
    before.forward(x, BnMode::Infer, &cb);
    unflip.forward(x, BnMode::Infer, &cu);
    none.forward(x, BnMode::Infer, &cn);
    CHECK(max_abs_diff(cb.seq, time_flip(cn.seq)) == 0.0);
    CHECK(max_abs_diff(cu.h4, time_flip(cb.h4)) == 0.0);
    CHECK(max_abs_diff(cb.sb, cn.sb) == 0.0);
    CHECK(max_abs_diff(before.infer(x), none.infer(x)) > 1e-6);

    CHECK(flip_placement_from_string("unflip_after_lstm") == FlipPlacement::UnflipAfterLstm);
    CHECK(to_string(FlipPlacement::NoFlip) == "no_flip");
    CHECK_THROWS_AS(flip_placement_from_string("sideways"), ConfigError);
}

TEST_CASE("training is deterministic and finite") {
    const TrainConfig cfg = small_config();
    PredictorModel m1(15), m2(15);
    Adam o1, o2;
    const auto r1 = train(m1, o1, cfg);
    const auto r2 = train(m2, o2, cfg);
    REQUIRE(r1.history.size() == 3);
    for (std::size_t e = 0; e < r1.history.size(); ++e) {
        CHECK(std::isfinite(r1.history[e].train_loss));
        CHECK(std::isfinite(r1.history[e].val_nmse));
        CHECK(r1.history[e].train_loss == r2.history[e].train_loss);
        CHECK(r1.history[e].val_nmse == r2.history[e].val_nmse);
    }
    CHECK(r1.history[0].lr == doctest::Approx(0.001));
    CHECK(o1.steps() == 3);
    const Tensor x = random_tensor({48, 14, 2}, 16);
    CHECK(m1.infer(x).values() == m2.infer(x).values());
}

TEST_CASE("early stopping halts after exactly three annealing cycles without improvement") {
    TrainConfig cfg = small_config();
    cfg.batch_size = 2;
    cfg.validation_size = 2;
    cfg.max_epochs = 1000;
    cfg.freeze_dataset = true;
    cfg.constant_lr = 0.0;
    cfg.l2 = 0.0;
    cfg.bn_momentum = 0.0;
    PredictorModel model(17);
    Adam opt;
    const auto res = train(model, opt, cfg);
    CHECK(res.early_stopped);
    CHECK(res.best_epoch == -1);
    CHECK(res.epochs_run == 300);
    CHECK(res.epochs_run == cfg.patience_epochs());
}

TEST_CASE("training validation rejects bad settings") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.data_mod_order = 8;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.channel_profile = "nope";
    CHECK_THROWS_AS(make_dataset(cfg, 1, Stream::TrainData, 0), ConfigError);
}

TEST_CASE("checkpoint round trip and mismatch") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ntnpred_test_ckpt";
    fs::create_directories(dir);
    PredictorModel model(18);
    model.params().at("Conv2D_2")[1][0] = 0.25;
    model.params().buffers("BN_1")[0][3] = -0.5;
    model.trained = true;
    Adam opt;
    const auto path = dir / "model.ckpt";
    save_checkpoint(path, make_checkpoint(model, &opt, 42));
    CHECK(fs::exists(path));
    CHECK(fs::exists(path.string() + ".json"));

    const auto ck = load_checkpoint(path);
    CHECK(ck.epoch == 42);
    const PredictorModel loaded = model_from_checkpoint(ck);
    CHECK(loaded.trained);
    CHECK(loaded.flip() == model.flip());
    const Tensor x = random_tensor({48, 14, 2}, 19);
    CHECK(loaded.infer(x).values() == model.infer(x).values());

    auto bad = ck;
    bad.architecture[0].filters_or_units = 9;
    CHECK_THROWS_AS(model_from_checkpoint(bad), CheckpointMismatch);
    auto missing = ck;
    missing.params.groups().pop_back();
    CHECK_THROWS_AS(model_from_checkpoint(missing), CheckpointMismatch);
    fs::remove_all(dir);
}

}  // TEST_SUITE
