#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "emogait/trainer.hpp"
#include "fixtures.hpp"

using namespace emogait;

namespace {

ModelConfig small_config() {
    ModelConfig mc;
    mc.window = 8;
    mc.h1 = 4;
    mc.h2 = 4;
    mc.h3 = 12;
    mc.h4 = 6;
    return mc;
}

Corpus one_gait_corpus(int frames) {
    Corpus c;
    c.train.push_back(fixtures::make_walk_gait(fixtures::neutral_style(), frames));
    return c;
}

grad::ParameterStore init_store(const ModelConfig& mc, std::uint64_t seed) {
    grad::ParameterStore ps;
    Rng rng = Rng::for_purpose(seed, "init");
    init_model_params(ps, mc, rng);
    return ps;
}

} // namespace

TEST_SUITE("trainer") {

TEST_CASE("curriculum state and mixing probabilities") {
    CHECK(CurriculumState::at_epoch(0, 0.995).teacher_forcing_prob == 1.0);
    CHECK(CurriculumState::at_epoch(100, 0.995).teacher_forcing_prob ==
          doctest::Approx(std::pow(0.995, 100)));

    Rng rng(12);
    int truth = 7, pred = 9;
    // prob 1 -> always truth; prob 0 -> always the prediction.
    for (int i = 0; i < 200; ++i) CHECK(curriculum_mix(truth, pred, 1.0, rng) == truth);
    for (int i = 0; i < 200; ++i) CHECK(curriculum_mix(truth, pred, 0.0, rng) == pred);

    // Bernoulli frequency: p = 0.995^100 over 10,000 draws within +-0.02.
    double p = std::pow(0.995, 100);
    int hits = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) hits += curriculum_mix(truth, pred, p, rng) == truth;
    double freq = static_cast<double>(hits) / draws;
    CHECK(std::abs(freq - p) < 0.02);

    CHECK_THROWS_AS(curriculum_mix(truth, pred, 1.5, rng), ValidationError);
}

TEST_CASE("train: learning rate decays exactly and the loss log is complete") {
    ModelConfig mc = small_config();
    TrainConfig tc;
    tc.epochs = 5;
    tc.batch_size = 8;
    tc.seed = 3;
    Corpus corpus = one_gait_corpus(20);
    grad::ParameterStore ps = init_store(mc, tc.seed);
    TrainResult r = train(corpus, mc, tc, ps);
    REQUIRE(r.log.size() == 5);
    for (int e = 0; e < 5; ++e) {
        CHECK(r.log[static_cast<std::size_t>(e)].lr ==
              0.001 * std::pow(0.999, static_cast<double>(e)));
        CHECK(r.log[static_cast<std::size_t>(e)].tf_prob ==
              doctest::Approx(std::pow(0.995, e)).epsilon(1e-15));
        CHECK(std::isfinite(r.log[static_cast<std::size_t>(e)].train_total));
    }
    CHECK(!r.best_checkpoint.empty());
}

TEST_CASE("train: seed-fixed double runs produce identical logs and checkpoints") {
    ModelConfig mc = small_config();
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    tc.seed = 11;
    Corpus corpus = one_gait_corpus(18);

    grad::ParameterStore a = init_store(mc, tc.seed);
    grad::ParameterStore b = init_store(mc, tc.seed);
    TrainResult ra = train(corpus, mc, tc, a);
    TrainResult rb = train(corpus, mc, tc, b);
    REQUIRE(ra.log.size() == rb.log.size());
    for (std::size_t e = 0; e < ra.log.size(); ++e) {
        CHECK(ra.log[e].train_total == rb.log[e].train_total);
        CHECK(ra.log[e].val_total == rb.log[e].val_total);
    }
    CHECK(ra.best_checkpoint == rb.best_checkpoint);
    for (const std::string& name : a.names()) CHECK(a.get(name).values == b.get(name).values);
}

TEST_CASE("train: zero learning rate freezes the loss log") {
    ModelConfig mc = small_config();
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 4;
    tc.seed = 5;
    tc.learning_rate = 1e-300; // effectively frozen (0 is rejected by validation)
    tc.teacher_forcing_decay = 1.0; // always teacher-forced: identical windows every epoch
    Corpus corpus = one_gait_corpus(16);
    grad::ParameterStore ps = init_store(mc, tc.seed);
    TrainResult r = train(corpus, mc, tc, ps);
    CHECK(r.log[1].train_total == doctest::Approx(r.log[0].train_total).epsilon(1e-9));
    CHECK(r.log[2].train_total == doctest::Approx(r.log[0].train_total).epsilon(1e-9));
}

TEST_CASE("train: loss drops on a one-gait overfit smoke run") {
    ModelConfig mc = small_config();
    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 12;
    tc.seed = 7;
    Corpus corpus = one_gait_corpus(24);
    grad::ParameterStore ps = init_store(mc, tc.seed);
    TrainResult r = train(corpus, mc, tc, ps);
    CHECK(r.log.back().train_total < 0.5 * r.log.front().train_total);
}

TEST_CASE("train: one-gait corpus over 300 epochs ends below 1% of the epoch-1 loss") {
    ModelConfig mc = fixtures::tiny_model_config();
    TrainConfig tc = fixtures::overfit_train_config();
    Corpus corpus;
    corpus.train.push_back(fixtures::make_walk_gait(fixtures::neutral_style(), 60));
    grad::ParameterStore ps = init_store(mc, tc.seed);
    TrainResult r = train(corpus, mc, tc, ps);
    CHECK(r.log.back().train_total < 0.01 * r.log.front().train_total);
}

TEST_CASE("train: rejects empty corpora and too-short gaits") {
    ModelConfig mc = small_config();
    TrainConfig tc;
    Corpus empty;
    grad::ParameterStore ps = init_store(mc, 1);
    CHECK_THROWS_AS(train(empty, mc, tc, ps), ValidationError);
    Corpus tiny = one_gait_corpus(mc.window); // no frame left to predict
    CHECK_THROWS_AS(train(tiny, mc, tc, ps), ValidationError);
}

TEST_CASE("teacher-forcing draw frequency tracks beta^E within 3 standard errors") {
    ModelConfig mc = small_config();
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.seed = 13;
    tc.teacher_forcing_decay = 0.5; // strong decay so epoch 1 is informative
    Corpus corpus;
    for (int i = 0; i < 4; ++i) {
        corpus.train.push_back(fixtures::make_walk_gait(fixtures::neutral_style(), 60));
    }
    grad::ParameterStore ps = init_store(mc, tc.seed);
    TrainResult r = train(corpus, mc, tc, ps);
    for (const EpochLog& row : r.log) {
        REQUIRE(row.tf_total_draws > 0);
        double freq = static_cast<double>(row.tf_truth_draws) / row.tf_total_draws;
        double se = std::sqrt(row.tf_prob * (1.0 - row.tf_prob) /
                              static_cast<double>(row.tf_total_draws));
        CHECK(std::abs(freq - row.tf_prob) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("evaluate: identical prediction gives zero errors (metric helpers)") {
    Gait g = fixtures::make_walk_gait(fixtures::happy_style(), 60);
    PoseErrorSums sums;
    accumulate_pose_errors(g.frames[10], g.frames[10], sums);
    CHECK(sums.position_sum == 0.0);
    CHECK(sums.rotation_sum == 0.0);
    CHECK(sums.position_count == 21);
    CHECK(sums.rotation_count == 60);

    // Every joint offset by 1% of the bbox diagonal -> pose error 0.01.
    double diag = bbox_diagonal(g);
    Pose shifted = g.frames[10];
    for (Vec3& p : shifted.positions) p.x += 0.01 * diag;
    PoseErrorSums s2;
    accumulate_pose_errors(g.frames[10], shifted, s2);
    CHECK((s2.position_sum / s2.position_count) / diag == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("evaluate: skips short clips and never mutates parameters") {
    ModelConfig mc = small_config();
    grad::ParameterStore ps = init_store(mc, 17);
    std::vector<Gait> clips;
    clips.push_back(fixtures::make_walk_gait(fixtures::neutral_style(), 30)); // too short
    clips.push_back(fixtures::make_walk_gait(fixtures::neutral_style(), 60));
    std::string before = grad::checkpoint_to_string(ps, "{}");
    EvalResult r = evaluate(ps, mc, clips);
    CHECK(r.clips_skipped == 1);
    CHECK(r.clips_evaluated == 1);
    CHECK(std::isfinite(r.pose_error));
    CHECK(r.pose_error > 0.0); // untrained model does not match the data
    CHECK(grad::checkpoint_to_string(ps, "{}") == before);
}

TEST_CASE("loss log CSV has the documented columns") {
    EpochLog row;
    row.epoch = 2;
    row.train_total = 1.25;
    row.val_total = 2.5;
    row.lr = 0.000999;
    row.tf_prob = 0.99;
    auto path = std::filesystem::temp_directory_path() / "emogait_losslog.csv";
    std::vector<EpochLog> log{row};
    write_loss_log_csv(path.string(), log);
    std::ifstream in(path);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "epoch,train_total,motion,pose,affective,root,foot_contact,val_total,lr,tf_prob");
    std::getline(in, line);
    CHECK(line.substr(0, 2) == "2,");
}

} // TEST_SUITE
