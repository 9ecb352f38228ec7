#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "emogait/motion_io.hpp"
#include "fixtures.hpp"

using namespace emogait;

namespace {

const char* kTwoJointBvh = R"(HIERARCHY
ROOT Root
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation
  JOINT Child
  {
    OFFSET 0 1 0
    CHANNELS 3 Zrotation Yrotation Xrotation
    End Site
    {
      OFFSET 0 0 0
    }
  }
}
MOTION
Frames: 3
Frame Time: 0.05
0 0 0 0 0 0 0 0 0
1 0 0 0 0 0 0 0 0
1 2 3 0 0 0 0 0 0
)";

/// A rigidly-consistent random clip built from per-joint local rotations
/// (standard hierarchy semantics), plus the matching per-bone world-frame
/// versors.
struct ConsistentClip {
    MotionClip clip;
    std::vector<std::vector<Versor>> bone_rotations;
};

ConsistentClip make_consistent_clip(Rng& rng, int frames) {
    const Skeleton& sk = default_skeleton();
    ConsistentClip out;
    out.clip.skeleton = sk;
    out.clip.frame_rate = 20.0;
    for (int f = 0; f < frames; ++f) {
        std::vector<Versor> local;
        for (int j = 0; j < sk.joint_count; ++j) {
            Vec3 axis{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            if (norm(axis) < 1e-6) axis = {1, 0, 0};
            local.push_back(versor_from_axis_angle(axis, rng.uniform(-0.6, 0.6)));
        }
        std::vector<Versor> acc(static_cast<std::size_t>(sk.joint_count));
        std::vector<Vec3> pos(static_cast<std::size_t>(sk.joint_count));
        pos[0] = {rng.uniform(-1, 1), rng.uniform(0.5, 1.5), rng.uniform(-1, 1)};
        acc[0] = local[0];
        std::vector<Versor> bones;
        for (int j = 1; j < sk.joint_count; ++j) {
            int p = sk.parent[static_cast<std::size_t>(j)];
            pos[static_cast<std::size_t>(j)] =
                pos[static_cast<std::size_t>(p)] +
                rotate(acc[static_cast<std::size_t>(p)], sk.offset[static_cast<std::size_t>(j)]);
            acc[static_cast<std::size_t>(j)] =
                quat_mul(acc[static_cast<std::size_t>(p)], local[static_cast<std::size_t>(j)]);
            bones.push_back(acc[static_cast<std::size_t>(p)]);
        }
        out.clip.frames.push_back(std::move(pos));
        out.bone_rotations.push_back(std::move(bones));
    }
    return out;
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "emogait_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_SUITE("motion_io") {

TEST_CASE("parse_bvh: minimal two-joint file") {
    MotionClip clip = parse_bvh(kTwoJointBvh);
    CHECK(clip.skeleton.joint_count == 2);
    CHECK(clip.frame_rate == doctest::Approx(20.0));
    REQUIRE(clip.frames.size() == 3);
    for (const auto& f : clip.frames) {
        CHECK(norm(f[1] - (f[0] + Vec3{0, 1, 0})) < 1e-12);
    }
    CHECK(norm(clip.frames[1][0] - Vec3{1, 0, 0}) < 1e-12);
    CHECK(norm(clip.frames[2][0] - Vec3{1, 2, 3}) < 1e-12);
}

TEST_CASE("parse_bvh: errors carry line numbers") {
    std::string bad = kTwoJointBvh;
    auto pos = bad.find("1 2 3");
    bad.replace(pos, 1, "x");
    CHECK_THROWS_AS(parse_bvh(bad), ParseError);

    std::string unknown = kTwoJointBvh;
    pos = unknown.find("Zrotation Yrotation Xrotation\n    End");
    unknown.replace(pos, 9, "Wrotation");
    CHECK_THROWS_AS(parse_bvh(unknown), ParseError);

    std::string nested = kTwoJointBvh;
    pos = nested.find("JOINT Child");
    nested.replace(pos, 5, "ROOT ");
    CHECK_THROWS_AS(parse_bvh(nested), ParseError);

    std::string truncated = kTwoJointBvh;
    truncated.resize(truncated.find("1 2 3") + 5);
    CHECK_THROWS_AS(parse_bvh(truncated), ParseError);
}

TEST_CASE("write_bvh: identity rotations produce all-zero Euler channels") {
    const Skeleton& sk = default_skeleton();
    MotionClip clip;
    clip.skeleton = sk;
    clip.frame_rate = 10.0;
    std::vector<Vec3> rest = sk.rest_positions();
    for (Vec3& v : rest) v.y += 0.9;
    clip.frames.push_back(rest);
    std::vector<std::vector<Versor>> rot{std::vector<Versor>(20, versor_identity())};
    std::string text = write_bvh(clip, rot);
    CHECK(text.find("Frames: 1") != std::string::npos);
    auto motion_pos = text.find("Frame Time:");
    std::istringstream row(text.substr(text.find('\n', motion_pos) + 1));
    double x, y, z;
    row >> x >> y >> z;
    CHECK(x == doctest::Approx(0.0));
    CHECK(y == doctest::Approx(0.9));
    double v;
    int zeros = 0;
    while (row >> v) {
        CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
        ++zeros;
    }
    CHECK(zeros == 63); // 21 joints x 3 rotation channels
}

TEST_CASE("BVH round trip: write -> parse positions within 1e-4") {
    Rng rng(123);
    double worst = 0.0;
    for (int c = 0; c < 8; ++c) {
        ConsistentClip cc = make_consistent_clip(rng, 5);
        std::string text = write_bvh(cc.clip, cc.bone_rotations);
        MotionClip back = parse_bvh(text);
        REQUIRE(back.frames.size() == cc.clip.frames.size());
        CHECK(back.frame_rate == doctest::Approx(cc.clip.frame_rate).epsilon(1e-4));
        for (std::size_t f = 0; f < back.frames.size(); ++f) {
            for (std::size_t j = 0; j < back.frames[f].size(); ++j) {
                worst = std::max(worst, norm(back.frames[f][j] - cc.clip.frames[f][j]));
            }
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("BVH round trip is idempotent after one pass") {
    Rng rng(5);
    ConsistentClip cc = make_consistent_clip(rng, 4);
    MotionClip once = parse_bvh(write_bvh(cc.clip, cc.bone_rotations));
    std::vector<std::vector<Versor>> rot;
    for (const auto& f : once.frames) rot.push_back(rotations_from_positions(once.skeleton, f));
    MotionClip twice = parse_bvh(write_bvh(once, rot));
    for (std::size_t f = 0; f < once.frames.size(); ++f) {
        for (std::size_t j = 0; j < once.frames[f].size(); ++j) {
            CHECK(norm(twice.frames[f][j] - once.frames[f][j]) < 1e-4);
        }
    }
}

TEST_CASE("window_and_downsample frame arithmetic") {
    const Skeleton& sk = default_skeleton();
    auto make_clip = [&](int frames) {
        MotionClip clip;
        clip.skeleton = sk;
        clip.frame_rate = 40.0;
        std::vector<Vec3> rest = sk.rest_positions();
        for (int t = 0; t < frames; ++t) {
            std::vector<Vec3> f = rest;
            for (Vec3& v : f) {
                v.y += 0.9;
                v.z += 0.01 * t; // frame index encoded in z
            }
            clip.frames.push_back(std::move(f));
        }
        return clip;
    };

    SUBCASE("240 frames, stride 4, window 60 -> exactly one 60-frame gait") {
        auto gaits = window_and_downsample(make_clip(240), 4, 60);
        REQUIRE(gaits.size() == 1);
        CHECK(gaits[0].length() == 60);
        CHECK(gaits[0].frame_rate == doctest::Approx(10.0));
    }
    SUBCASE("239 frames -> no gaits") {
        CHECK(window_and_downsample(make_clip(239), 4, 60).empty());
    }
    SUBCASE("480 frames -> two gaits covering every 4th source frame") {
        auto gaits = window_and_downsample(make_clip(480), 4, 60);
        REQUIRE(gaits.size() == 2);
        int k = 0;
        for (const Gait& g : gaits) {
            for (const Pose& p : g.frames) {
                CHECK(p.positions[0].z == doctest::Approx(0.01 * (k * 4)).epsilon(1e-12));
                ++k;
            }
        }
        CHECK(k == 120);
    }
}

TEST_CASE("split_corpus determinism and partition") {
    CorpusManifest m;
    m.seed = 42;
    for (int i = 0; i < 10; ++i) {
        m.entries.push_back({"g" + std::to_string(i) + ".json", EmotionVector(), ""});
    }
    CorpusManifest a = split_corpus(m, {0.8, 0.1, 0.1});
    int train = 0, val = 0, test = 0;
    for (const auto& e : a.entries) {
        if (e.split == "train") ++train;
        if (e.split == "val") ++val;
        if (e.split == "test") ++test;
    }
    CHECK(train == 8);
    CHECK(val == 1);
    CHECK(test == 1);

    CorpusManifest b = split_corpus(m, {0.8, 0.1, 0.1});
    for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].split == b.entries[i].split);

    CorpusManifest all_train = split_corpus(m, {1.0, 0.0, 0.0});
    for (const auto& e : all_train.entries) CHECK(e.split == "train");

    CorpusManifest big;
    for (int i = 0; i < 1000; ++i) big.entries.push_back({"g" + std::to_string(i), EmotionVector(), ""});
    big.seed = 1;
    CorpusManifest s1 = split_corpus(big);
    big.seed = 2;
    CorpusManifest s2 = split_corpus(big);
    int diffs = 0;
    for (std::size_t i = 0; i < s1.entries.size(); ++i) diffs += s1.entries[i].split != s2.entries[i].split;
    CHECK(diffs > 0);

    CHECK_THROWS_AS(split_corpus(m, {0.9, 0.2, -0.1}), ValidationError);
    CHECK_THROWS_AS(split_corpus(m, {0.5, 0.2, 0.2}), ValidationError);
}

TEST_CASE("gait JSON round-trips exactly") {
    Gait g = fixtures::make_walk_gait(fixtures::happy_style(), 20);
    std::vector<EmotionVector> schedule(3, EmotionVector({0.25, 0.25, 0.25, 0.25}));
    std::string text = gait_to_json(g, &schedule);
    std::vector<EmotionVector> schedule_back;
    Gait back = gait_from_json(text, &schedule_back);
    CHECK(back.skeleton == g.skeleton);
    CHECK(back.frame_rate == g.frame_rate);
    CHECK(back.emotion == g.emotion);
    REQUIRE(back.length() == g.length());
    for (int t = 0; t < g.length(); ++t) {
        auto ti = static_cast<std::size_t>(t);
        for (int j = 0; j < g.skeleton.joint_count; ++j) {
            auto ji = static_cast<std::size_t>(j);
            CHECK(back.frames[ti].positions[ji].x == g.frames[ti].positions[ji].x);
            CHECK(back.frames[ti].positions[ji].y == g.frames[ti].positions[ji].y);
            CHECK(back.frames[ti].positions[ji].z == g.frames[ti].positions[ji].z);
        }
        for (std::size_t j = 0; j < g.frames[ti].rotations.size(); ++j) {
            CHECK(back.frames[ti].rotations[j].w == g.frames[ti].rotations[j].w);
            CHECK(back.frames[ti].rotations[j].x == g.frames[ti].rotations[j].x);
        }
    }
    REQUIRE(schedule_back.size() == schedule.size());
    CHECK(schedule_back[0] == schedule[0]);
}

TEST_CASE("manifest save/load and corpus loading") {
    auto dir = temp_dir();
    Gait g1 = fixtures::make_walk_gait(fixtures::happy_style(), 24);
    Gait g2 = fixtures::make_walk_gait(fixtures::sad_style(), 24);
    save_gait((dir / "a.json").string(), g1);
    save_gait((dir / "b.json").string(), g2);
    CorpusManifest m;
    m.seed = 9;
    m.entries.push_back({"a.json", EmotionVector({1, 0, 0, 0}), "train"});
    m.entries.push_back({"b.json", EmotionVector({0, 1, 0, 0}), "test"});
    save_manifest((dir / "manifest.json").string(), m);
    CorpusManifest back = load_manifest((dir / "manifest.json").string());
    CHECK(back.seed == 9);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].split == "train");

    Corpus corpus = load_corpus((dir / "manifest.json").string());
    CHECK(corpus.train.size() == 1);
    CHECK(corpus.test.size() == 1);
    CHECK(corpus.val.empty());
    CHECK(corpus.train[0].emotion.components[0] == doctest::Approx(1.0));
}

} // TEST_SUITE
