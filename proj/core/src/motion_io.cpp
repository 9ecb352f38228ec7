#include "emogait/motion_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emogait/util.hpp"

namespace emogait {

namespace {

// ---- BVH lexing ----

struct Lexer {
    std::string_view text;
    std::size_t pos = 0;
    int line = 1;

    void skip_ws() {
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '\n') {
                ++line;
                ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++pos;
            } else {
                break;
            }
        }
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    std::string next() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        return std::string(text.substr(start, pos - start));
    }

    std::string expect(const char* what) {
        if (eof()) throw ParseError(std::string("unexpected end of file, expected ") + what, line);
        return next();
    }

    void expect_token(const char* tok) {
        std::string t = expect(tok);
        if (t != tok) throw ParseError("expected '" + std::string(tok) + "', got '" + t + "'", line);
    }

    double number(const char* what) {
        int at = line;
        std::string t = expect(what);
        char* end = nullptr;
        double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size()) {
            throw ParseError("expected a number for " + std::string(what) + ", got '" + t + "'", at);
        }
        return v;
    }

    int integer(const char* what) {
        double v = number(what);
        if (v != std::floor(v)) throw ParseError(std::string(what) + " must be an integer", line);
        return static_cast<int>(v);
    }
};

enum class Channel { Xpos, Ypos, Zpos, Xrot, Yrot, Zrot };

Channel parse_channel(const std::string& tok, int line) {
    if (tok == "Xposition") return Channel::Xpos;
    if (tok == "Yposition") return Channel::Ypos;
    if (tok == "Zposition") return Channel::Zpos;
    if (tok == "Xrotation") return Channel::Xrot;
    if (tok == "Yrotation") return Channel::Yrot;
    if (tok == "Zrotation") return Channel::Zrot;
    throw ParseError("unknown channel token '" + tok + "'", line);
}

struct BvhJoint {
    std::string name;
    int parent = -1;
    Vec3 offset{};
    std::vector<Channel> channels;
    bool has_joint_child = false;
};

struct BvhFile {
    std::vector<BvhJoint> joints;
    int total_channels = 0;
};

void parse_joint_block(Lexer& lex, BvhFile& out, int parent, const std::string& name) {
    int self = static_cast<int>(out.joints.size());
    out.joints.push_back({name, parent, {}, {}, false});
    if (parent >= 0) out.joints[static_cast<std::size_t>(parent)].has_joint_child = true;
    lex.expect_token("{");
    lex.expect_token("OFFSET");
    double ox = lex.number("OFFSET x");
    double oy = lex.number("OFFSET y");
    double oz = lex.number("OFFSET z");
    out.joints[static_cast<std::size_t>(self)].offset = {ox, oy, oz};
    lex.expect_token("CHANNELS");
    int n = lex.integer("channel count");
    for (int i = 0; i < n; ++i) {
        int at = lex.line;
        out.joints[static_cast<std::size_t>(self)].channels.push_back(parse_channel(lex.expect("channel name"), at));
    }
    out.total_channels += n;
    while (true) {
        int at = lex.line;
        std::string tok = lex.expect("joint body");
        if (tok == "JOINT") {
            std::string child = lex.expect("joint name");
            parse_joint_block(lex, out, self, child);
        } else if (tok == "End") {
            std::string site = lex.expect("'Site'");
            if (site != "Site") throw ParseError("expected 'Site' after 'End'", at);
            lex.expect_token("{");
            lex.expect_token("OFFSET");
            lex.number("end site x");
            lex.number("end site y");
            lex.number("end site z");
            lex.expect_token("}");
        } else if (tok == "ROOT") {
            throw ParseError("nested ROOT inside joint hierarchy", at);
        } else if (tok == "}") {
            break;
        } else {
            throw ParseError("unexpected token '" + tok + "' in joint body", at);
        }
    }
}

Versor channel_rotation(Channel c, double degrees) {
    double rad = degrees * kPi / 180.0;
    switch (c) {
        case Channel::Xrot: return versor_from_axis_angle({1, 0, 0}, rad);
        case Channel::Yrot: return versor_from_axis_angle({0, 1, 0}, rad);
        case Channel::Zrot: return versor_from_axis_angle({0, 0, 1}, rad);
        default: return versor_identity();
    }
}

// ---- number formatting (6 significant digits) ----

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

void CorpusManifest::validate() const {
    for (const Entry& e : entries) {
        if (e.path.empty()) throw ValidationError("manifest entry with empty path");
        for (double v : e.emotion.components) {
            if (v < 0.0) throw ValidationError("manifest emotion components must be nonnegative");
        }
        if (!e.split.empty() && e.split != "train" && e.split != "val" && e.split != "test") {
            throw ValidationError("manifest split tag must be train/val/test, got '" + e.split + "'");
        }
    }
}

MotionClip parse_bvh(std::string_view text, std::string source_id) {
    Lexer lex{text};
    lex.expect_token("HIERARCHY");
    int at = lex.line;
    std::string tok = lex.expect("ROOT");
    if (tok != "ROOT") throw ParseError("expected ROOT, got '" + tok + "'", at);
    BvhFile file;
    parse_joint_block(lex, file, -1, lex.expect("root name"));

    at = lex.line;
    tok = lex.expect("MOTION");
    if (tok == "ROOT") throw ParseError("multiple ROOT blocks", at);
    if (tok != "MOTION") throw ParseError("expected MOTION, got '" + tok + "'", at);

    tok = lex.expect("Frames:");
    if (tok == "Frames") tok += lex.expect(":");
    if (tok != "Frames:") throw ParseError("expected 'Frames:', got '" + tok + "'", lex.line);
    int frame_count = lex.integer("frame count");
    tok = lex.expect("Frame Time:");
    if (tok != "Frame") throw ParseError("expected 'Frame Time:', got '" + tok + "'", lex.line);
    tok = lex.expect("Time:");
    if (tok == "Time") tok += lex.expect(":");
    if (tok != "Time:") throw ParseError("expected 'Frame Time:', got '" + tok + "'", lex.line);
    double frame_time = lex.number("frame time");
    if (frame_time <= 0.0) throw ParseError("Frame Time must be positive", lex.line);

    MotionClip clip;
    clip.source_id = std::move(source_id);
    clip.frame_rate = 1.0 / frame_time;
    Skeleton& sk = clip.skeleton;
    sk.joint_count = static_cast<int>(file.joints.size());
    Vec3 root_offset = file.joints[0].offset;
    for (int j = 0; j < sk.joint_count; ++j) {
        const BvhJoint& bj = file.joints[static_cast<std::size_t>(j)];
        sk.joint_names.push_back(bj.name);
        sk.parent.push_back(bj.parent);
        sk.offset.push_back(j == 0 ? Vec3{0, 0, 0} : bj.offset);
        if (!bj.has_joint_child) sk.leaf_set.push_back(j);
    }
    sk.validate();

    clip.frames.reserve(static_cast<std::size_t>(frame_count));
    std::vector<double> row(static_cast<std::size_t>(file.total_channels));
    std::vector<Versor> world_rot(static_cast<std::size_t>(sk.joint_count));
    for (int f = 0; f < frame_count; ++f) {
        int row_line = lex.line;
        for (int c = 0; c < file.total_channels; ++c) {
            if (lex.eof()) {
                throw ParseError("motion data ended early: frame " + std::to_string(f) + " has " +
                                     std::to_string(c) + " of " + std::to_string(file.total_channels) +
                                     " channels",
                                 row_line);
            }
            row[static_cast<std::size_t>(c)] = lex.number("motion value");
        }
        std::vector<Vec3> positions(static_cast<std::size_t>(sk.joint_count));
        int at_ch = 0;
        for (int j = 0; j < sk.joint_count; ++j) {
            const BvhJoint& bj = file.joints[static_cast<std::size_t>(j)];
            Vec3 trans{0, 0, 0};
            Versor local = versor_identity();
            for (Channel ch : bj.channels) {
                double v = row[static_cast<std::size_t>(at_ch++)];
                switch (ch) {
                    case Channel::Xpos: trans.x += v; break;
                    case Channel::Ypos: trans.y += v; break;
                    case Channel::Zpos: trans.z += v; break;
                    default: local = quat_mul(local, channel_rotation(ch, v)); break;
                }
            }
            if (j == 0) {
                positions[0] = root_offset + trans;
                world_rot[0] = local;
            } else {
                int p = bj.parent;
                positions[static_cast<std::size_t>(j)] =
                    positions[static_cast<std::size_t>(p)] +
                    rotate(world_rot[static_cast<std::size_t>(p)], bj.offset) + trans;
                world_rot[static_cast<std::size_t>(j)] =
                    quat_mul(world_rot[static_cast<std::size_t>(p)], local);
            }
        }
        clip.frames.push_back(std::move(positions));
    }
    if (!lex.eof()) throw ParseError("trailing data after last frame", lex.line);
    return clip;
}

std::string write_bvh(const MotionClip& clip, std::span<const std::vector<Versor>> rotations) {
    const Skeleton& sk = clip.skeleton;
    sk.validate();
    if (rotations.size() != clip.frames.size()) {
        throw ShapeError("write_bvh: rotation frames (" + std::to_string(rotations.size()) +
                         ") do not match clip frames (" + std::to_string(clip.frames.size()) + ")");
    }
    for (const auto& r : rotations) {
        if (static_cast<int>(r.size()) != sk.joint_count - 1) {
            throw ShapeError("write_bvh: each frame needs J-1 versors");
        }
    }
    auto kids = sk.children();

    std::ostringstream out;
    out << "HIERARCHY\n";
    std::function<void(int, int)> emit_joint = [&](int j, int depth) {
        std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
        const Vec3& o = sk.offset[static_cast<std::size_t>(j)];
        out << indent << (j == 0 ? "ROOT " : "JOINT ") << sk.joint_names[static_cast<std::size_t>(j)] << "\n";
        out << indent << "{\n";
        out << indent << "  OFFSET " << fmt6(o.x) << " " << fmt6(o.y) << " " << fmt6(o.z) << "\n";
        if (j == 0) {
            out << indent << "  CHANNELS 6 Xposition Yposition Zposition Zrotation Yrotation Xrotation\n";
        } else {
            out << indent << "  CHANNELS 3 Zrotation Yrotation Xrotation\n";
        }
        if (kids[static_cast<std::size_t>(j)].empty()) {
            out << indent << "  End Site\n";
            out << indent << "  {\n";
            out << indent << "    OFFSET 0 0 0\n";
            out << indent << "  }\n";
        } else {
            for (int c : kids[static_cast<std::size_t>(j)]) emit_joint(c, depth + 1);
        }
        out << indent << "}\n";
    };
    emit_joint(0, 0);

    out << "MOTION\n";
    out << "Frames: " << clip.frames.size() << "\n";
    out << "Frame Time: " << fmt6(1.0 / clip.frame_rate) << "\n";

    std::vector<Versor> accumulated(static_cast<std::size_t>(sk.joint_count));
    for (std::size_t f = 0; f < clip.frames.size(); ++f) {
        const std::vector<Versor>& bone_rot = rotations[f];
        // Fit the accumulated hierarchy rotation of each joint so that its
        // children's bones land where the per-bone versors put them. A single
        // child pins it exactly; siblings take the least-squares fit.
        for (int j = 0; j < sk.joint_count; ++j) {
            const auto& ch = kids[static_cast<std::size_t>(j)];
            if (ch.empty()) {
                int p = sk.parent[static_cast<std::size_t>(j)];
                accumulated[static_cast<std::size_t>(j)] =
                    p < 0 ? versor_identity() : accumulated[static_cast<std::size_t>(p)];
            } else if (ch.size() == 1) {
                accumulated[static_cast<std::size_t>(j)] = bone_rot[static_cast<std::size_t>(ch[0] - 1)];
            } else {
                std::vector<std::pair<Vec3, Vec3>> pairs;
                pairs.reserve(ch.size());
                for (int c : ch) {
                    const Vec3& o = sk.offset[static_cast<std::size_t>(c)];
                    pairs.emplace_back(o, rotate(bone_rot[static_cast<std::size_t>(c - 1)], o));
                }
                accumulated[static_cast<std::size_t>(j)] = best_fit_rotation(pairs);
            }
        }
        const Vec3& root = clip.frames[f][0];
        out << fmt6(root.x) << " " << fmt6(root.y) << " " << fmt6(root.z);
        for (int j = 0; j < sk.joint_count; ++j) {
            int p = sk.parent[static_cast<std::size_t>(j)];
            Versor parent_acc = p < 0 ? versor_identity() : accumulated[static_cast<std::size_t>(p)];
            Versor local = quat_mul(quat_conjugate(parent_acc), accumulated[static_cast<std::size_t>(j)]);
            auto e = euler_zyx(quat_normalized(local));
            out << " " << fmt6(e[0] * 180.0 / kPi) << " " << fmt6(e[1] * 180.0 / kPi) << " "
                << fmt6(e[2] * 180.0 / kPi);
        }
        out << "\n";
    }
    return out.str();
}

std::vector<Gait> window_and_downsample(const MotionClip& clip, int stride, int window) {
    if (stride < 1) throw ValidationError("window_and_downsample: stride must be >= 1");
    if (window < 2) throw ValidationError("window_and_downsample: window must be >= 2");
    if (clip.frame_rate <= 0.0) throw ValidationError("window_and_downsample: invalid frame rate");
    int kept = clip.length() / stride;
    int windows = kept / window;
    std::vector<Gait> out;
    for (int w = 0; w < windows; ++w) {
        std::vector<std::vector<Vec3>> frames;
        frames.reserve(static_cast<std::size_t>(window));
        for (int k = 0; k < window; ++k) {
            int src = (w * window + k) * stride;
            frames.push_back(clip.frames[static_cast<std::size_t>(src)]);
        }
        out.push_back(gait_from_positions(clip.skeleton, frames, clip.frame_rate / stride));
    }
    return out;
}

Gait gait_from_positions(const Skeleton& skeleton, const std::vector<std::vector<Vec3>>& frames,
                         double frame_rate) {
    Gait g;
    g.skeleton = skeleton;
    g.frame_rate = frame_rate;
    g.frames.reserve(frames.size());
    for (const auto& pos : frames) {
        Pose p;
        p.positions = pos;
        p.root_position = pos[0];
        p.rotations = rotations_from_positions(skeleton, pos);
        g.frames.push_back(std::move(p));
    }
    hemisphere_align_gait(g);
    return g;
}

CorpusManifest split_corpus(const CorpusManifest& manifest, std::array<double, 3> fractions) {
    for (double f : fractions) {
        if (f < 0.0) throw ValidationError("split fractions must be nonnegative");
    }
    double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
    CorpusManifest out = manifest;
    std::vector<std::size_t> order(out.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng = Rng::for_purpose(manifest.seed, "split");
    rng.shuffle(order);
    std::size_t n = order.size();
    auto n_train = static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(n)));
    auto n_val = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) {
        std::string tag = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
        out.entries[order[i]].split = tag;
    }
    return out;
}

// ---- JSON documents ----

namespace {

nlohmann::ordered_json skeleton_to_json(const Skeleton& sk) {
    nlohmann::ordered_json j;
    j["joint_count"] = sk.joint_count;
    j["parents"] = sk.parent;
    nlohmann::ordered_json offsets = nlohmann::ordered_json::array();
    for (const Vec3& o : sk.offset) offsets.push_back({o.x, o.y, o.z});
    j["offsets"] = std::move(offsets);
    j["names"] = sk.joint_names;
    j["leaves"] = sk.leaf_set;
    return j;
}

Skeleton skeleton_from_json(const nlohmann::json& j) {
    Skeleton sk;
    sk.joint_count = j.at("joint_count").get<int>();
    sk.parent = j.at("parents").get<std::vector<int>>();
    for (const auto& o : j.at("offsets")) {
        sk.offset.push_back({o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()});
    }
    sk.joint_names = j.at("names").get<std::vector<std::string>>();
    sk.leaf_set = j.value("leaves", std::vector<int>{});
    sk.validate();
    return sk;
}

} // namespace

std::string gait_to_json(const Gait& gait, const std::vector<EmotionVector>* schedule) {
    nlohmann::ordered_json doc;
    doc["format"] = "emogait.gait";
    doc["version"] = 1;
    doc["skeleton"] = skeleton_to_json(gait.skeleton);
    doc["frame_rate"] = gait.frame_rate;
    doc["emotion"] = gait.emotion.components;
    nlohmann::ordered_json frames = nlohmann::ordered_json::array();
    nlohmann::ordered_json rotations = nlohmann::ordered_json::array();
    bool have_rot = true;
    for (const Pose& p : gait.frames) {
        nlohmann::ordered_json fp = nlohmann::ordered_json::array();
        for (const Vec3& v : p.positions) fp.push_back({v.x, v.y, v.z});
        frames.push_back(std::move(fp));
        if (p.rotations.empty()) {
            have_rot = false;
        } else {
            nlohmann::ordered_json fr = nlohmann::ordered_json::array();
            for (const Versor& q : p.rotations) fr.push_back({q.w, q.x, q.y, q.z});
            rotations.push_back(std::move(fr));
        }
    }
    doc["frames"] = std::move(frames);
    if (have_rot && !gait.frames.empty()) doc["rotations"] = std::move(rotations);
    if (schedule != nullptr) {
        nlohmann::ordered_json sch = nlohmann::ordered_json::array();
        for (const EmotionVector& e : *schedule) sch.push_back(e.components);
        doc["emotion_schedule"] = std::move(sch);
    }
    return doc.dump();
}

Gait gait_from_json(const std::string& text, std::vector<EmotionVector>* schedule_out) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "emogait.gait") throw ValidationError("not an emogait gait document");
    Gait g;
    g.skeleton = skeleton_from_json(doc.at("skeleton"));
    g.frame_rate = doc.at("frame_rate").get<double>();
    g.emotion = EmotionVector(doc.at("emotion").get<std::vector<double>>());
    const auto& frames = doc.at("frames");
    const nlohmann::json* rotations = doc.contains("rotations") ? &doc.at("rotations") : nullptr;
    if (rotations != nullptr && rotations->size() != frames.size()) {
        throw ValidationError("gait document: rotations/frames length mismatch");
    }
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto& fp = frames[t];
        if (static_cast<int>(fp.size()) != g.skeleton.joint_count) {
            throw ValidationError("gait document: frame " + std::to_string(t) + " has wrong joint count");
        }
        Pose p;
        for (const auto& v : fp) {
            p.positions.push_back({v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
        }
        p.root_position = p.positions[0];
        if (rotations != nullptr) {
            for (const auto& q : (*rotations)[t]) {
                p.rotations.push_back({q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                       q.at(3).get<double>()});
            }
            if (static_cast<int>(p.rotations.size()) != g.skeleton.joint_count - 1) {
                throw ValidationError("gait document: frame " + std::to_string(t) + " has wrong versor count");
            }
        } else {
            p.rotations = rotations_from_positions(g.skeleton, p.positions);
        }
        g.frames.push_back(std::move(p));
    }
    if (schedule_out != nullptr && doc.contains("emotion_schedule")) {
        schedule_out->clear();
        for (const auto& e : doc.at("emotion_schedule")) {
            schedule_out->push_back(EmotionVector(e.get<std::vector<double>>()));
        }
    }
    return g;
}

void save_gait(const std::string& path, const Gait& gait, const std::vector<EmotionVector>* schedule) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open gait file for writing: " + path);
    out << gait_to_json(gait, schedule);
}

Gait load_gait(const std::string& path, std::vector<EmotionVector>* schedule_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open gait file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return gait_from_json(text, schedule_out);
}

void save_manifest(const std::string& path, const CorpusManifest& manifest) {
    manifest.validate();
    nlohmann::ordered_json doc;
    doc["format"] = "emogait.manifest";
    doc["version"] = 1;
    doc["seed"] = manifest.seed;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : manifest.entries) {
        entries.push_back({{"path", e.path}, {"emotion", e.emotion.components}, {"split", e.split}});
    }
    doc["entries"] = std::move(entries);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open manifest for writing: " + path);
    out << doc.dump(2);
}

CorpusManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open manifest: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "emogait.manifest") throw ValidationError("not an emogait manifest");
    CorpusManifest m;
    m.seed = doc.value("seed", 0ull);
    for (const auto& e : doc.at("entries")) {
        CorpusManifest::Entry entry;
        entry.path = e.at("path").get<std::string>();
        entry.emotion = EmotionVector(e.at("emotion").get<std::vector<double>>());
        entry.split = e.value("split", "");
        m.entries.push_back(std::move(entry));
    }
    m.validate();
    return m;
}

Corpus load_corpus(const std::string& manifest_path, int stride, int window) {
    CorpusManifest manifest = load_manifest(manifest_path);
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    Corpus corpus;
    for (const auto& entry : manifest.entries) {
        std::filesystem::path p = base / entry.path;
        std::vector<Gait> gaits;
        if (p.extension() == ".bvh") {
            std::ifstream in(p, std::ios::binary);
            if (!in) throw ValidationError("cannot open motion file: " + p.string());
            std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            gaits = window_and_downsample(parse_bvh(text, p.filename().string()), stride, window);
        } else {
            gaits.push_back(load_gait(p.string()));
        }
        for (Gait& g : gaits) {
            g.emotion = entry.emotion.normalized();
            std::vector<Gait>& dst = entry.split == "val" ? corpus.val
                                     : entry.split == "test" ? corpus.test
                                                             : corpus.train;
            dst.push_back(std::move(g));
        }
    }
    return corpus;
}

} // namespace emogait
