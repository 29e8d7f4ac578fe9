#include "ascn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ascn/error.hpp"
#include "ascn/rng.hpp"

namespace ascn {

namespace {

constexpr std::uint64_t kLayerSalt = 0x6C617965;  // "laye"
constexpr std::uint64_t kHeadSalt = 0x68656164;   // "head"
constexpr char kMagic[4] = {'A', 'S', 'C', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

void validate_common(const ModelConfig& cfg) {
    if (cfg.channels.empty()) throw ConfigError("channel plan cannot be empty");
    for (int c : cfg.channels)
        if (c < 1) throw ConfigError("every stage needs at least one kernel");
    if (cfg.supports < 1) throw ConfigError("kernels need at least one support branch");
    if (cfg.pool_rate < 1) throw ConfigError("pool rate must be >= 1");
    if (cfg.classifier_hidden < 1) throw ConfigError("classifier hidden width must be >= 1");
    if (cfg.classes < 2) throw ConfigError("a classifier needs at least two classes");
    if (!cfg.class_names.empty() &&
        cfg.class_names.size() != static_cast<std::size_t>(cfg.classes))
        throw ConfigError("class name list must match the class count");
    if (cfg.adaptive.m_min < 2 || cfg.adaptive.m_min > cfg.adaptive.m_max)
        throw ConfigError("neighborhood search range is invalid");
    if (cfg.fixed_m < 0) throw ConfigError("fixed neighborhood size cannot be negative");
}

std::string tname(int stage, const char* leaf) {
    return "conv" + std::to_string(stage) + "." + leaf;
}

const ParamTensor& named(const ParamStore& store, const std::string& name) {
    const ParamTensor* t = store.find(name);
    if (t == nullptr) throw ConfigError("missing parameter tensor: " + name);
    return *t;
}

ParamTensor& named(ParamStore& store, const std::string& name) {
    ParamTensor* t = store.find(name);
    if (t == nullptr) throw ConfigError("missing parameter tensor: " + name);
    return *t;
}

// Little-endian encoding helpers; the file format is byte-identical across
// hosts regardless of native order.
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint32_t get_u32(const std::string& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)]))
             << (8 * i);
    return v;
}
std::uint64_t get_u64(const std::string& in, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)]))
             << (8 * i);
    return v;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{
        {"channels", c.channels},
        {"supports", c.supports},
        {"pool_rate", c.pool_rate},
        {"classifier_hidden", c.classifier_hidden},
        {"classes", c.classes},
        {"class_names", c.class_names},
        {"m_min", c.adaptive.m_min},
        {"m_max", c.adaptive.m_max},
        {"fixed_m", c.fixed_m},
        {"mode", c.mode == ConvMode::full ? "full" : "dir_only"},
        {"init_seed", c.init_seed},
    };
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    j.at("channels").get_to(c.channels);
    j.at("supports").get_to(c.supports);
    j.at("pool_rate").get_to(c.pool_rate);
    j.at("classifier_hidden").get_to(c.classifier_hidden);
    j.at("classes").get_to(c.classes);
    j.at("class_names").get_to(c.class_names);
    j.at("m_min").get_to(c.adaptive.m_min);
    j.at("m_max").get_to(c.adaptive.m_max);
    j.at("fixed_m").get_to(c.fixed_m);
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "full")
        c.mode = ConvMode::full;
    else if (mode == "dir_only")
        c.mode = ConvMode::dir_only;
    else
        throw ConfigError("unknown convolution mode: " + mode);
    j.at("init_seed").get_to(c.init_seed);
}

void validate_config(const ModelConfig& cfg) {
    validate_common(cfg);
    if (cfg.channels.size() != 5)
        throw ConfigError("the stack is exactly five convolution stages");
}

namespace detail {

Model make_model(ModelConfig cfg, int pools) {
    validate_common(cfg);
    const int stages = static_cast<int>(cfg.channels.size());
    if (pools < 0 || pools >= stages)
        throw ConfigError("pooled stage count must stay below the stage count");

    Model m;
    m.config = std::move(cfg);
    m.pools = pools;

    const int s_count = m.config.supports;
    for (int i = 0; i < stages; ++i) {
        const int j_count = m.config.channels[static_cast<std::size_t>(i)];
        const int d_in = m.in_dim(i);
        const StrConvLayer init =
            init_layer(j_count, s_count, d_in, j_count,
                       mix64(m.config.init_seed, kLayerSalt, static_cast<std::uint64_t>(i)),
                       m.config.mode);
        const int fused = init.fused_dim();
        const std::size_t js = static_cast<std::size_t>(j_count) * static_cast<std::size_t>(s_count);

        ParamTensor& center = m.params.create(tname(i, "center"),
                                              static_cast<std::size_t>(d_in),
                                              static_cast<std::size_t>(j_count));
        ParamTensor& supw = m.params.create(tname(i, "support_weight"),
                                            static_cast<std::size_t>(d_in), js);
        ParamTensor& supd = m.params.create(tname(i, "support_dir"), 3, js);
        supd.unit_columns = true;
        for (int j = 0; j < j_count; ++j) {
            const DirectionKernel& k = init.dir_kernels[static_cast<std::size_t>(j)];
            for (int d = 0; d < d_in; ++d)
                center.value(static_cast<std::size_t>(d), static_cast<std::size_t>(j)) =
                    k.center_weight[static_cast<std::size_t>(d)];
            for (int s = 0; s < s_count; ++s) {
                const std::size_t col =
                    static_cast<std::size_t>(j) * static_cast<std::size_t>(s_count) +
                    static_cast<std::size_t>(s);
                for (int d = 0; d < d_in; ++d)
                    supw.value(static_cast<std::size_t>(d), col) =
                        k.support_weights[static_cast<std::size_t>(s)][static_cast<std::size_t>(d)];
                const Vec3& dir = k.support_dirs[static_cast<std::size_t>(s)];
                supd.value(0, col) = dir.x;
                supd.value(1, col) = dir.y;
                supd.value(2, col) = dir.z;
            }
        }
        if (m.config.mode == ConvMode::full) {
            ParamTensor& dw = m.params.create(tname(i, "dist_weight"), 1, js);
            ParamTensor& db = m.params.create(tname(i, "dist_bias"), 1,
                                              static_cast<std::size_t>(j_count));
            for (int j = 0; j < j_count; ++j) {
                const DistanceKernel& k = init.dist_kernels[static_cast<std::size_t>(j)];
                for (int s = 0; s < s_count; ++s)
                    dw.value(0, static_cast<std::size_t>(j) * static_cast<std::size_t>(s_count) +
                                    static_cast<std::size_t>(s)) =
                        k.support_weights[static_cast<std::size_t>(s)];
                db.value(0, static_cast<std::size_t>(j)) = k.bias;
            }
        }
        ParamTensor& w1 = m.params.create(tname(i, "w1"), static_cast<std::size_t>(fused),
                                          static_cast<std::size_t>(fused));
        w1.value = init.w1;
        ParamTensor& b1 = m.params.create(tname(i, "b1"), 1, static_cast<std::size_t>(fused));
        b1.value.data() = init.b1;
        ParamTensor& w2 = m.params.create(tname(i, "w2"), static_cast<std::size_t>(fused),
                                          static_cast<std::size_t>(j_count));
        w2.value = init.w2;
        ParamTensor& b2 = m.params.create(tname(i, "b2"), 1, static_cast<std::size_t>(j_count));
        b2.value.data() = init.b2;
    }

    // Classifier head: rectified hidden layer, linear class logits; drawn
    // with the same fan-scaled bounds as the stage fusers.
    const int j_last = m.config.channels.back();
    const int hidden = m.config.classifier_hidden;
    const int classes = m.config.classes;
    Rng rng(mix64(m.config.init_seed, kHeadSalt));
    const double a1 = std::sqrt(6.0 / static_cast<double>(j_last + hidden));
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + classes));
    ParamTensor& hw1 = m.params.create("head.w1", static_cast<std::size_t>(j_last),
                                       static_cast<std::size_t>(hidden));
    for (double& v : hw1.value.data()) v = rng.uniform(-a1, a1);
    ParamTensor& hb1 = m.params.create("head.b1", 1, static_cast<std::size_t>(hidden));
    for (double& v : hb1.value.data()) v = rng.uniform(-a1, a1);
    ParamTensor& hw2 = m.params.create("head.w2", static_cast<std::size_t>(hidden),
                                       static_cast<std::size_t>(classes));
    for (double& v : hw2.value.data()) v = rng.uniform(-a2, a2);
    ParamTensor& hb2 = m.params.create("head.b2", 1, static_cast<std::size_t>(classes));
    for (double& v : hb2.value.data()) v = rng.uniform(-a2, a2);
    return m;
}

}  // namespace detail

Model build_model(const ModelConfig& cfg) {
    validate_config(cfg);
    return detail::make_model(cfg, 3);
}

StrConvLayer layer_view(const Model& m, int stage) {
    if (stage < 0 || stage >= m.stages()) throw InvalidParam("stage index out of range");
    const int j_count = m.config.channels[static_cast<std::size_t>(stage)];
    const int s_count = m.config.supports;
    const int d_in = m.in_dim(stage);

    StrConvLayer layer;
    layer.mode = m.config.mode;
    const ParamTensor& center = named(m.params, tname(stage, "center"));
    const ParamTensor& supw = named(m.params, tname(stage, "support_weight"));
    const ParamTensor& supd = named(m.params, tname(stage, "support_dir"));
    layer.dir_kernels.resize(static_cast<std::size_t>(j_count));
    for (int j = 0; j < j_count; ++j) {
        DirectionKernel& k = layer.dir_kernels[static_cast<std::size_t>(j)];
        k.center_weight.resize(static_cast<std::size_t>(d_in));
        for (int d = 0; d < d_in; ++d)
            k.center_weight[static_cast<std::size_t>(d)] =
                center.value(static_cast<std::size_t>(d), static_cast<std::size_t>(j));
        k.support_dirs.resize(static_cast<std::size_t>(s_count));
        k.support_weights.resize(static_cast<std::size_t>(s_count));
        for (int s = 0; s < s_count; ++s) {
            const std::size_t col =
                static_cast<std::size_t>(j) * static_cast<std::size_t>(s_count) +
                static_cast<std::size_t>(s);
            k.support_dirs[static_cast<std::size_t>(s)] =
                Vec3{supd.value(0, col), supd.value(1, col), supd.value(2, col)};
            auto& w = k.support_weights[static_cast<std::size_t>(s)];
            w.resize(static_cast<std::size_t>(d_in));
            for (int d = 0; d < d_in; ++d) w[static_cast<std::size_t>(d)] = supw.value(static_cast<std::size_t>(d), col);
        }
    }
    if (m.config.mode == ConvMode::full) {
        const ParamTensor& dw = named(m.params, tname(stage, "dist_weight"));
        const ParamTensor& db = named(m.params, tname(stage, "dist_bias"));
        layer.dist_kernels.resize(static_cast<std::size_t>(j_count));
        for (int j = 0; j < j_count; ++j) {
            DistanceKernel& k = layer.dist_kernels[static_cast<std::size_t>(j)];
            k.support_weights.resize(static_cast<std::size_t>(s_count));
            for (int s = 0; s < s_count; ++s)
                k.support_weights[static_cast<std::size_t>(s)] =
                    dw.value(0, static_cast<std::size_t>(j) * static_cast<std::size_t>(s_count) +
                                    static_cast<std::size_t>(s));
            k.bias = db.value(0, static_cast<std::size_t>(j));
        }
    }
    layer.w1 = named(m.params, tname(stage, "w1")).value;
    layer.b1 = named(m.params, tname(stage, "b1")).value.data();
    layer.w2 = named(m.params, tname(stage, "w2")).value;
    layer.b2 = named(m.params, tname(stage, "b2")).value.data();
    return layer;
}

std::vector<double> forward_logits(const Model& m, const GeometryPlan& plan) {
    if (plan.stages.size() != static_cast<std::size_t>(m.stages()) ||
        plan.keeps.size() != static_cast<std::size_t>(m.pools))
        throw DimensionMismatch("geometry plan does not match the model architecture");

    FeatureMap f(static_cast<std::size_t>(plan.stages[0].n), 1, 1.0);
    for (int i = 0; i < m.stages(); ++i) {
        const StageGeometry& g = plan.stages[static_cast<std::size_t>(i)];
        f = str_conv_layer(f, g.fields, layer_view(m, i));
        if (i < m.pools)
            f = pool_features(f, g.fields, plan.keeps[static_cast<std::size_t>(i)]);
    }
    const std::vector<double> agg = global_max_aggregate(f);

    const FeatureMap& w1 = named(m.params, "head.w1").value;
    const std::vector<double>& b1 = named(m.params, "head.b1").value.data();
    const FeatureMap& w2 = named(m.params, "head.w2").value;
    const std::vector<double>& b2 = named(m.params, "head.b2").value.data();

    std::vector<double> hidden(w1.cols());
    for (std::size_t h = 0; h < w1.cols(); ++h) {
        double acc = 0.0;
        for (std::size_t k = 0; k < w1.rows(); ++k) acc += agg[k] * w1(k, h);
        acc += b1[h];
        hidden[h] = acc > 0.0 ? acc : 0.0;
    }
    std::vector<double> logits(w2.cols());
    for (std::size_t c = 0; c < w2.cols(); ++c) {
        double acc = 0.0;
        for (std::size_t h = 0; h < w2.rows(); ++h) acc += hidden[h] * w2(h, c);
        logits[c] = acc + b2[c];
    }
    return logits;
}

std::vector<double> forward_cloud(const Model& m, const PointCloud& cloud,
                                  std::uint64_t pool_salt) {
    PlanOptions opt;
    opt.pool_seeds = eval_pool_seeds(pool_salt, m.pools);
    const GeometryPlan plan =
        plan_geometry(cloud, m.config.geometry(), m.stages(), m.pools, opt);
    return forward_logits(m, plan);
}

TapeForward forward_tape(Tape& t, Model& m, const GeometryPlan& plan, int label) {
    if (plan.stages.size() != static_cast<std::size_t>(m.stages()) ||
        plan.keeps.size() != static_cast<std::size_t>(m.pools))
        throw DimensionMismatch("geometry plan does not match the model architecture");
    if (label < 0 || label >= m.config.classes)
        throw InvalidParam("training label out of range");

    const int s_count = m.config.supports;
    NodeId f = t.constant(FeatureMap(static_cast<std::size_t>(plan.stages[0].n), 1, 1.0));
    for (int i = 0; i < m.stages(); ++i) {
        const StageGeometry& g = plan.stages[static_cast<std::size_t>(i)];
        const NodeId ctr = t.matmul(f, t.param(named(m.params, tname(i, "center"))));
        const NodeId proj = t.matmul(f, t.param(named(m.params, tname(i, "support_weight"))));
        const NodeId gathered = t.gather_rows(proj, g.nbr_flat);
        const NodeId dirs = t.unit_columns(t.param(named(m.params, tname(i, "support_dir"))));
        const NodeId cosv = t.clamp_unit(t.matmul(t.constant(g.unit_dirs), dirs));
        const NodeId sims = t.mul(gathered, cosv);
        const NodeId branch = t.col_group_sum(t.segment_max_rows(sims, g.slots), s_count);
        const NodeId dir = t.add(ctr, branch);

        NodeId x = dir;
        if (m.config.mode == ConvMode::full) {
            const NodeId wsum =
                t.col_group_sum(t.param(named(m.params, tname(i, "dist_weight"))), s_count);
            const NodeId dist =
                t.add_row_vec(t.outer(t.constant(g.far_dist), wsum),
                              t.param(named(m.params, tname(i, "dist_bias"))));
            x = t.hstack(dir, dist);
        }
        const NodeId h = t.relu(t.add_row_vec(t.matmul(x, t.param(named(m.params, tname(i, "w1")))),
                                              t.param(named(m.params, tname(i, "b1")))));
        NodeId out = t.add_row_vec(t.matmul(h, t.param(named(m.params, tname(i, "w2")))),
                                   t.param(named(m.params, tname(i, "b2"))));
        if (i < m.pools) {
            const NodeId pooled = t.neighborhood_max(out, g.nbr_flat, g.valid, g.slots);
            out = t.gather_rows(pooled, plan.keeps[static_cast<std::size_t>(i)]);
        }
        f = out;
    }

    const NodeId agg = t.col_max(f);
    const NodeId hidden =
        t.relu(t.add_row_vec(t.matmul(agg, t.param(named(m.params, "head.w1"))),
                             t.param(named(m.params, "head.b1"))));
    const NodeId logits = t.add_row_vec(t.matmul(hidden, t.param(named(m.params, "head.w2"))),
                                        t.param(named(m.params, "head.b2")));
    return TapeForward{t.select_neg(t.log_softmax_row(logits), label), logits};
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw InvalidParam("softmax needs at least one logit");
    double m = logits[0];
    for (double x : logits)
        if (x > m) m = x;
    std::vector<double> out(logits.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        acc += out[i];
    }
    for (double& v : out) v /= acc;
    return out;
}

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw InvalidParam("argmax of an empty range");
    int arg = 0;
    double best = values[0];
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > best) {
            best = values[i];
            arg = static_cast<int>(i);
        }
    return arg;
}

void save_model(const std::filesystem::path& path, const Model& m) {
    nlohmann::json j;
    j["config"] = m.config;
    j["pools"] = m.pools;
    const std::string config_text = j.dump();
    const std::vector<double> flat = m.params.flatten();

    std::string bytes;
    bytes.append(kMagic, 4);
    put_u32(bytes, kFormatVersion);
    put_u64(bytes, config_text.size());
    bytes.append(config_text);
    put_u64(bytes, flat.size());
    for (double v : flat) put_u64(bytes, std::bit_cast<std::uint64_t>(v));
    put_u64(bytes, fnv1a(bytes));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open model file for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed to write model file: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 24 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw CorruptModel("not a model file");
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kFormatVersion)
        throw VersionError("unsupported model format version " + std::to_string(version));
    const std::string payload = bytes.substr(0, bytes.size() - 8);
    if (get_u64(bytes, bytes.size() - 8) != fnv1a(payload))
        throw CorruptModel("model file checksum mismatch");

    std::size_t off = 8;
    const std::uint64_t json_len = get_u64(payload, off);
    off += 8;
    if (off + json_len + 8 > payload.size()) throw CorruptModel("model file truncated");
    nlohmann::json j;
    ModelConfig cfg;
    int pools = 0;
    try {
        j = nlohmann::json::parse(payload.substr(off, json_len));
        cfg = j.at("config").get<ModelConfig>();
        pools = j.at("pools").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(std::string("model description unreadable: ") + e.what());
    }
    off += json_len;

    Model m = detail::make_model(cfg, pools);
    const std::uint64_t count = get_u64(payload, off);
    off += 8;
    if (count != m.params.scalar_count())
        throw CorruptModel("parameter count does not match the configuration");
    if (off + count * 8 != payload.size()) throw CorruptModel("model file truncated");
    std::vector<double> flat(count);
    for (std::size_t i = 0; i < count; ++i)
        flat[i] = std::bit_cast<double>(get_u64(payload, off + i * 8));
    m.params.load_flat(flat);
    return m;
}

}  // namespace ascn
