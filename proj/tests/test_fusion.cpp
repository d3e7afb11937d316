#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "msa/errors.hpp"
#include "msa/fusion.hpp"
#include "msa/ops.hpp"
#include "test_util.hpp"

using msa::FusionConfig;
using msa::FusionMode;
using msa::Modality;
using msa::ModelParams;
using msa::SequenceSample;
using msa::Tensor;
using msa::UtteranceRecord;
using test_util::random_tensor;

namespace {

using Vec = std::vector<double>;

// Straight-line reimplementation of the forward pass on plain vectors,
// kept independent of the Tensor graph on purpose.

void lstm_oracle_step(const Vec& w, const Vec& u, const Vec& b, std::size_t hd,
                      std::size_t in, const Vec& x, Vec& h, Vec& c) {
    Vec z(4 * hd, 0.0);
    for (std::size_t r = 0; r < 4 * hd; ++r) {
        double acc = b[r];
        for (std::size_t j = 0; j < in; ++j) acc += w[r * in + j] * x[j];
        for (std::size_t j = 0; j < hd; ++j) acc += u[r * hd + j] * h[j];
        z[r] = acc;
    }
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    Vec h_next(hd), c_next(hd);
    for (std::size_t j = 0; j < hd; ++j) {
        double gi = sig(z[j]);
        double gf = sig(z[hd + j]);
        double go = sig(z[2 * hd + j]);
        double gg = std::tanh(z[3 * hd + j]);
        c_next[j] = gf * c[j] + gi * gg;
        h_next[j] = go * std::tanh(c_next[j]);
    }
    h = h_next;
    c = c_next;
}

std::vector<Vec> lstm_oracle(const msa::LstmParams& p,
                             const std::vector<Vec>& xs) {
    Vec h(p.hidden, 0.0), c(p.hidden, 0.0);
    std::vector<Vec> out;
    for (const Vec& x : xs) {
        lstm_oracle_step(p.w.data(), p.u.data(), p.b.data(), p.hidden, p.input,
                         x, h, c);
        out.push_back(h);
    }
    return out;
}

Vec softmax_oracle(const Vec& v) {
    double mx = v[0];
    for (double e : v) mx = std::max(mx, e);
    Vec out(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        total += out[i];
    }
    for (double& e : out) e /= total;
    return out;
}

Vec matvec_oracle(const Vec& m, std::size_t rows, std::size_t cols,
                  const Vec& x) {
    Vec out(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out[r] += m[r * cols + c] * x[c];
    }
    return out;
}

std::vector<Vec> mha_oracle(const msa::MhaParams& p,
                            const std::vector<Vec>& seq) {
    const std::size_t steps = seq.size();
    std::vector<Vec> heads_out(steps, Vec());
    for (std::size_t h = 0; h < p.heads; ++h) {
        std::vector<Vec> q(steps), k(steps), v(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            q[t] = matvec_oracle(p.w_q[h].data(), p.d_k, p.d_model, seq[t]);
            k[t] = matvec_oracle(p.w_k[h].data(), p.d_k, p.d_model, seq[t]);
            v[t] = matvec_oracle(p.w_v[h].data(), p.d_k, p.d_model, seq[t]);
        }
        for (std::size_t t = 0; t < steps; ++t) {
            Vec scores(steps, 0.0);
            for (std::size_t s = 0; s < steps; ++s) {
                double dot = 0.0;
                for (std::size_t j = 0; j < p.d_k; ++j) dot += q[t][j] * k[s][j];
                scores[s] = dot / std::sqrt(static_cast<double>(p.d_k));
            }
            Vec weights = softmax_oracle(scores);
            Vec head(p.d_k, 0.0);
            for (std::size_t s = 0; s < steps; ++s) {
                for (std::size_t j = 0; j < p.d_k; ++j) {
                    head[j] += weights[s] * v[s][j];
                }
            }
            heads_out[t].insert(heads_out[t].end(), head.begin(), head.end());
        }
    }
    std::vector<Vec> out(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        out[t] = matvec_oracle(p.w_o.data(), p.d_model, p.heads * p.d_k,
                               heads_out[t]);
    }
    return out;
}

std::vector<Vec> forward_oracle(const SequenceSample& sample,
                                const ModelParams& p) {
    const FusionConfig& cfg = p.config;
    const std::size_t steps = sample.utterances.size();
    std::vector<Vec> xs_text, xs_audio, xs_visual;
    for (const UtteranceRecord& r : sample.utterances) {
        xs_text.push_back(r.text);
        xs_audio.push_back(r.audio);
        xs_visual.push_back(r.visual);
    }
    std::vector<Vec> h_text = lstm_oracle(p.lstm_text, xs_text);
    std::vector<Vec> h_audio = lstm_oracle(p.lstm_audio, xs_audio);
    std::vector<Vec> h_visual = lstm_oracle(p.lstm_visual, xs_visual);

    auto states_for = [&](Modality m) -> std::vector<Vec>& {
        switch (m) {
            case Modality::text: return h_text;
            case Modality::audio: return h_audio;
            default: return h_visual;
        }
    };
    std::vector<Vec>& a = states_for(cfg.order[0]);
    std::vector<Vec>& b = states_for(cfg.order[1]);
    std::vector<Vec>& c = states_for(cfg.order[2]);

    std::vector<Vec> fused(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        switch (cfg.mode) {
            case FusionMode::scalar_gate: {
                double s = 0.0;
                for (std::size_t j = 0; j < cfg.d_model; ++j) {
                    s += a[t][j] * b[t][j];
                }
                fused[t].resize(cfg.d_model);
                for (std::size_t j = 0; j < cfg.d_model; ++j) {
                    fused[t][j] = s * c[t][j];
                }
                break;
            }
            case FusionMode::hadamard:
                fused[t].resize(cfg.d_model);
                for (std::size_t j = 0; j < cfg.d_model; ++j) {
                    fused[t][j] = a[t][j] * b[t][j] * c[t][j];
                }
                break;
            case FusionMode::concat:
                fused[t] = a[t];
                fused[t].insert(fused[t].end(), b[t].begin(), b[t].end());
                fused[t].insert(fused[t].end(), c[t].begin(), c[t].end());
                break;
        }
    }

    std::vector<Vec> h_fused = lstm_oracle(p.lstm_fused, fused);
    std::vector<Vec> attended = mha_oracle(p.mha, h_fused);

    std::vector<Vec> probs(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        Vec logits =
            matvec_oracle(p.head_w.data(), cfg.num_classes, cfg.d_model,
                          attended[t]);
        for (std::size_t j = 0; j < cfg.num_classes; ++j) {
            logits[j] += p.head_b.data()[j];
        }
        probs[t] = softmax_oracle(logits);
    }
    return probs;
}

SequenceSample random_sample(std::size_t steps, std::size_t dim,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    SequenceSample sample;
    sample.video_id = "vid";
    for (std::size_t t = 0; t < steps; ++t) {
        UtteranceRecord r;
        r.video_id = "vid";
        r.utterance_index = t;
        r.label = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            r.text.push_back(dist(rng));
            r.audio.push_back(dist(rng));
            r.visual.push_back(dist(rng));
        }
        sample.utterances.push_back(r);
    }
    return sample;
}

FusionConfig tiny_config(FusionMode mode) {
    FusionConfig cfg;
    cfg.mode = mode;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.input_dim = 4;
    return cfg;
}

}  // namespace

TEST_CASE("fuse_states scalar_gate with a unit gate passes h_c through") {
    Tensor fused = msa::fuse_states(Tensor::from_data({2}, {1, 0}),
                                    Tensor::from_data({2}, {1, 0}),
                                    Tensor::from_data({2}, {0.5, 0.5}),
                                    FusionMode::scalar_gate);
    CHECK(fused.data() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("fuse_states hadamard multiplies elementwise") {
    Tensor fused = msa::fuse_states(Tensor::from_data({2}, {2, 3}),
                                    Tensor::from_data({2}, {4, 5}),
                                    Tensor::from_data({2}, {1, 0}),
                                    FusionMode::hadamard);
    CHECK(fused.data() == std::vector<double>{8, 0});
}

TEST_CASE("fuse_states scalar_gate depends on the fusion order") {
    Tensor a = Tensor::from_data({2}, {1, 0});
    Tensor b = Tensor::from_data({2}, {0, 1});
    Tensor c = Tensor::from_data({2}, {1, 1});
    CHECK(msa::fuse_states(a, b, c, FusionMode::scalar_gate).data() ==
          std::vector<double>{0, 0});
    CHECK(msa::fuse_states(a, c, b, FusionMode::scalar_gate).data() ==
          std::vector<double>{0, 1});
}

TEST_CASE("fuse_states concat stacks the three states in order") {
    Tensor fused = msa::fuse_states(Tensor::from_data({2}, {1, 2}),
                                    Tensor::from_data({2}, {3, 4}),
                                    Tensor::from_data({2}, {5, 6}),
                                    FusionMode::concat);
    CHECK(fused.shape() == msa::Shape{6});
    CHECK(fused.data() == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("fuse_states rejects mismatched state shapes") {
    CHECK_THROWS_AS(msa::fuse_states(Tensor::zeros({2}), Tensor::zeros({3}),
                                     Tensor::zeros({2}),
                                     FusionMode::hadamard),
                    msa::DimensionError);
}

TEST_CASE("scalar_gate output is collinear with the third state") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor a = random_tensor({6}, rng);
        Tensor b = random_tensor({6}, rng);
        Tensor c = random_tensor({6}, rng);
        Tensor fused = msa::fuse_states(a, b, c, FusionMode::scalar_gate);
        double ff = 0.0, cc = 0.0, fc = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            ff += fused.data()[j] * fused.data()[j];
            cc += c.data()[j] * c.data()[j];
            fc += fused.data()[j] * c.data()[j];
        }
        CHECK(std::abs(std::abs(fc) / std::sqrt(ff * cc) - 1.0) < 1e-10);
    }
}

TEST_CASE("fused_dim is d_model except in concat mode") {
    FusionConfig cfg = tiny_config(FusionMode::scalar_gate);
    CHECK(cfg.fused_dim() == 8);
    cfg.mode = FusionMode::hadamard;
    CHECK(cfg.fused_dim() == 8);
    cfg.mode = FusionMode::concat;
    CHECK(cfg.fused_dim() == 24);
}

TEST_CASE("concat mode changes only lstm_fused input shapes") {
    ModelParams p1 = ModelParams::init(tiny_config(FusionMode::scalar_gate), 5);
    ModelParams p2 = ModelParams::init(tiny_config(FusionMode::concat), 5);
    auto n1 = p1.named_params();
    auto n2 = p2.named_params();
    REQUIRE(n1.size() == n2.size());
    for (std::size_t i = 0; i < n1.size(); ++i) {
        CHECK(n1[i].first == n2[i].first);
        if (n1[i].first == "lstm_fused.W" || n1[i].first == "lstm_fused.U") {
            continue;
        }
        CHECK(n1[i].second.shape() == n2[i].second.shape());
    }
    CHECK(p1.lstm_fused.w.shape() == msa::Shape{32, 8});
    CHECK(p2.lstm_fused.w.shape() == msa::Shape{32, 24});
    // U stays [4h, h] in both modes; only W widens with the input.
    CHECK(p1.lstm_fused.u.shape() == p2.lstm_fused.u.shape());
}

TEST_CASE("named_params tensors are live handles into the model") {
    ModelParams p = ModelParams::init(tiny_config(FusionMode::hadamard), 5);
    for (const auto& [name, tensor] : p.named_params()) {
        if (name == "head.b") CHECK(tensor.same_node(p.head_b));
        if (name == "lstm_text.W") CHECK(tensor.same_node(p.lstm_text.w));
        if (name == "mha.W_O") CHECK(tensor.same_node(p.mha.w_o));
    }
}

TEST_CASE("forward emits valid probability vectors in every mode") {
    SequenceSample sample = random_sample(4, 4, 88);
    for (FusionMode mode : {FusionMode::scalar_gate, FusionMode::hadamard,
                            FusionMode::concat}) {
        ModelParams p = ModelParams::init(tiny_config(mode), 11);
        std::vector<Tensor> probs = msa::forward(sample, p);
        REQUIRE(probs.size() == 4);
        for (const Tensor& pt : probs) {
            REQUIRE(pt.shape() == msa::Shape{7});
            double total = 0.0;
            for (double v : pt.data()) {
                CHECK(v > 0.0);
                total += v;
            }
            CHECK(std::abs(total - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("forward matches the straight-line oracle within 1e-10") {
    SequenceSample sample = random_sample(3, 4, 33);
    for (FusionMode mode : {FusionMode::scalar_gate, FusionMode::hadamard,
                            FusionMode::concat}) {
        CAPTURE(msa::fusion_mode_name(mode));
        ModelParams p = ModelParams::init(tiny_config(mode), 17);
        std::vector<Tensor> got = msa::forward(sample, p);
        std::vector<Vec> want = forward_oracle(sample, p);
        REQUIRE(got.size() == want.size());
        for (std::size_t t = 0; t < got.size(); ++t) {
            for (std::size_t j = 0; j < 7; ++j) {
                CHECK(got[t].data()[j] ==
                      doctest::Approx(want[t][j]).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("forward honors a non-default fusion order") {
    SequenceSample sample = random_sample(3, 4, 34);
    FusionConfig cfg = tiny_config(FusionMode::scalar_gate);
    cfg.order = {Modality::visual, Modality::text, Modality::audio};
    ModelParams p = ModelParams::init(cfg, 19);
    std::vector<Tensor> got = msa::forward(sample, p);
    std::vector<Vec> want = forward_oracle(sample, p);
    for (std::size_t t = 0; t < got.size(); ++t) {
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(got[t].data()[j] ==
                  doctest::Approx(want[t][j]).epsilon(1e-10));
        }
    }
}

TEST_CASE("hadamard forward is invariant under stream/parameter swaps") {
    SequenceSample sample = random_sample(3, 4, 55);
    ModelParams p = ModelParams::init(tiny_config(FusionMode::hadamard), 23);
    std::vector<Tensor> base = msa::forward(sample, p);

    // Rotate the three feature streams and the matching LSTMs together.
    SequenceSample rotated = sample;
    for (UtteranceRecord& r : rotated.utterances) {
        Vec text = r.text;
        r.text = r.audio;
        r.audio = r.visual;
        r.visual = text;
    }
    ModelParams q = p;
    q.lstm_text = p.lstm_audio;
    q.lstm_audio = p.lstm_visual;
    q.lstm_visual = p.lstm_text;

    std::vector<Tensor> swapped = msa::forward(rotated, q);
    REQUIRE(swapped.size() == base.size());
    for (std::size_t t = 0; t < base.size(); ++t) {
        for (std::size_t j = 0; j < 7; ++j) {
            CHECK(swapped[t].data()[j] ==
                  doctest::Approx(base[t].data()[j]).epsilon(1e-10));
        }
    }
}

TEST_CASE("forward rejects bad samples") {
    ModelParams p = ModelParams::init(tiny_config(FusionMode::scalar_gate), 3);
    SequenceSample empty;
    empty.video_id = "v";
    CHECK_THROWS_AS(msa::forward(empty, p), msa::ContractError);

    SequenceSample wrong = random_sample(2, 5, 66);
    CHECK_THROWS_AS(msa::forward(wrong, p), msa::DimensionError);

    SequenceSample ragged = random_sample(2, 4, 67);
    ragged.utterances[1].audio.pop_back();
    CHECK_THROWS_AS(msa::forward(ragged, p), msa::AlignmentError);
}

TEST_CASE("argmax_class picks the largest probability") {
    Tensor probs = Tensor::from_data(
        {7}, {0.7, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05});
    CHECK(msa::argmax_class(probs) == 0);
}

TEST_CASE("argmax_class breaks exact ties toward the lower class") {
    Tensor probs = Tensor::from_data({7}, {0.1, 0.1, 0.25, 0.1, 0.1, 0.25, 0.1});
    CHECK(msa::argmax_class(probs) == 2);
}

TEST_CASE("argmax_class is invariant under monotone transforms") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor v = random_tensor({7}, rng, 2.0);
        int base = msa::argmax_class(v);
        Vec shifted(7), expd(7);
        for (std::size_t j = 0; j < 7; ++j) {
            shifted[j] = 3.0 * v.data()[j] - 1.5;
            expd[j] = std::exp(v.data()[j]);
        }
        CHECK(msa::argmax_class(Tensor::from_data({7}, shifted)) == base);
        CHECK(msa::argmax_class(Tensor::from_data({7}, expd)) == base);
    }
}

TEST_CASE("predict is the argmax of forward") {
    SequenceSample sample = random_sample(4, 4, 99);
    ModelParams p = ModelParams::init(tiny_config(FusionMode::hadamard), 29);
    std::vector<int> classes = msa::predict(sample, p);
    std::vector<Tensor> probs = msa::forward(sample, p);
    REQUIRE(classes.size() == probs.size());
    for (std::size_t t = 0; t < classes.size(); ++t) {
        CHECK(classes[t] == msa::argmax_class(probs[t]));
        CHECK(classes[t] >= 0);
        CHECK(classes[t] <= 6);
    }
}

TEST_CASE("model save/load/save round-trips byte for byte") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "msa_fusion_test";
    fs::create_directories(dir);
    fs::path first = dir / "model_a.json";
    fs::path second = dir / "model_b.json";

    FusionConfig cfg = tiny_config(FusionMode::concat);
    cfg.order = {Modality::audio, Modality::text, Modality::visual};
    ModelParams p = ModelParams::init(cfg, 31);
    msa::save_model(p, first);
    ModelParams loaded = msa::load_model(first);
    msa::save_model(loaded, second);

    auto slurp = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    CHECK(slurp(first) == slurp(second));
    CHECK(loaded.config == p.config);

    auto n1 = p.named_params();
    auto n2 = loaded.named_params();
    REQUIRE(n1.size() == n2.size());
    for (std::size_t i = 0; i < n1.size(); ++i) {
        CHECK(n1[i].first == n2[i].first);
        CHECK(n1[i].second.data() == n2[i].second.data());
    }

    SequenceSample sample = random_sample(3, 4, 111);
    CHECK(msa::predict(sample, p) == msa::predict(sample, loaded));

    fs::remove_all(dir);
}

TEST_CASE("loading a truncated model file fails cleanly") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "msa_fusion_trunc";
    fs::create_directories(dir);
    fs::path full = dir / "model.json";
    ModelParams p = ModelParams::init(tiny_config(FusionMode::scalar_gate), 37);
    msa::save_model(p, full);

    std::ifstream in(full, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    in.close();

    fs::path cut = dir / "cut.json";
    std::ofstream out(cut, std::ios::binary);
    out << text.substr(0, text.size() / 2);
    out.close();
    CHECK_THROWS_AS(msa::load_model(cut), msa::FormatError);

    // A wrong version number is refused by name.
    fs::path versioned = dir / "version.json";
    std::string bumped = text;
    std::size_t pos = bumped.find("\"format_version\"");
    REQUIRE(pos != std::string::npos);
    std::size_t colon = bumped.find(':', pos);
    bumped.replace(colon + 1, bumped.find_first_of(",}", colon) - colon - 1,
                   " 999");
    std::ofstream vout(versioned, std::ios::binary);
    vout << bumped;
    vout.close();
    try {
        msa::load_model(versioned);
        FAIL("expected FormatError for format_version 999");
    } catch (const msa::FormatError& e) {
        CHECK(std::string(e.what()).find("format_version") !=
              std::string::npos);
    }

    fs::remove_all(dir);
}

TEST_CASE("modality and mode names round-trip") {
    for (Modality m : {Modality::text, Modality::audio, Modality::visual}) {
        CHECK(msa::modality_from_name(msa::modality_name(m)) == m);
    }
    for (FusionMode m : {FusionMode::scalar_gate, FusionMode::hadamard,
                         FusionMode::concat}) {
        CHECK(msa::fusion_mode_from_name(msa::fusion_mode_name(m)) == m);
    }
    CHECK_THROWS_AS(msa::modality_from_name("smell"), msa::ConfigError);
    CHECK_THROWS_AS(msa::fusion_mode_from_name("average"), msa::ConfigError);
}

TEST_CASE("config validation rejects bad setups") {
    FusionConfig cfg = tiny_config(FusionMode::scalar_gate);
    cfg.num_classes = 5;
    CHECK_THROWS_AS(cfg.validate(), msa::ConfigError);

    cfg = tiny_config(FusionMode::scalar_gate);
    cfg.heads = 3;
    CHECK_THROWS_AS(cfg.validate(), msa::ConfigError);

    cfg = tiny_config(FusionMode::scalar_gate);
    cfg.order = {Modality::text, Modality::text, Modality::visual};
    CHECK_THROWS_AS(cfg.validate(), msa::ConfigError);

    cfg = tiny_config(FusionMode::scalar_gate);
    CHECK_NOTHROW(cfg.validate());
}
