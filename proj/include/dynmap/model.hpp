#pragma once

#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynmap/dataset.hpp"
#include "dynmap/encoding.hpp"
#include "dynmap/neuralnet.hpp"

namespace dynmap {

inline constexpr size_t kContextEmbedDim = 128;

struct ContextSet {
    bool sat = false;
    bool time = false;
    bool loc = false;

    size_t count() const { return (sat ? 1u : 0u) + (time ? 1u : 0u) + (loc ? 1u : 0u); }
    bool empty() const { return count() == 0; }

    static ContextSet parse(const std::string& spec) {
        ContextSet cs;
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok == "sat") cs.sat = true;
            else if (tok == "time") cs.time = true;
            else if (tok == "loc") cs.loc = true;
            else if (!tok.empty()) throw ValidationError("unknown context '" + tok + "'");
        }
        return cs;
    }

    std::string to_string() const {
        std::string s;
        auto add = [&s](const char* name) {
            if (!s.empty()) s += ',';
            s += name;
        };
        if (sat) add("sat");
        if (time) add("time");
        if (loc) add("loc");
        return s;
    }
};

struct Hyperparams {
    double lr = 0.001;
    size_t batch = 32;
    size_t epochs = 10;
    double l2 = 0.0005;
    uint64_t seed = 0;
};

struct ModelConfig {
    ContextSet contexts;
    Dims dims{2048, 365, 40};
    Hyperparams hyper;
};

struct AttributePrediction {
    std::vector<double> places;     // softmax output, sums to 1
    std::vector<double> transient;  // sigmoid output, entries in (0, 1)
};

struct TrainingReport {
    std::vector<double> places_loss;
    std::vector<double> transient_loss;
    std::vector<double> total_loss;
};

// F(t, l, I(l); Theta). Context encoders map each enabled conditioning
// variable to a 128-d embedding; the overhead branch has one head per
// attribute. Estimators consume the concatenated embeddings (sat, time, loc).
struct DynamicMapModel {
    ModelConfig config;
    nn::Mlp time_encoder;
    nn::Mlp loc_encoder;
    nn::Mlp sat_head_places;
    nn::Mlp sat_head_transient;
    nn::Mlp places_estimator;
    nn::Mlp transient_estimator;
};

namespace detail {

inline nn::Mlp make_encoder(size_t in, Rng& rng) {
    nn::Mlp net;
    net.layers.push_back(nn::make_layer(in, 256, nn::Activation::Relu, rng));
    net.layers.push_back(nn::make_layer(256, 512, nn::Activation::Relu, rng));
    net.layers.push_back(nn::make_layer(512, kContextEmbedDim, nn::Activation::Relu, rng));
    return net;
}

inline nn::Mlp make_sat_head(size_t in, Rng& rng) {
    nn::Mlp net;
    net.layers.push_back(nn::make_layer(in, 256, nn::Activation::Relu, rng));
    net.layers.push_back(nn::make_layer(256, kContextEmbedDim, nn::Activation::Relu, rng));
    return net;
}

inline nn::Mlp make_estimator(size_t in, size_t out, nn::Activation out_act, Rng& rng) {
    nn::Mlp net;
    net.layers.push_back(nn::make_layer(in, 256, nn::Activation::Relu, rng));
    net.layers.push_back(nn::make_layer(256, 512, nn::Activation::Relu, rng));
    net.layers.push_back(nn::make_layer(512, out, out_act, rng));
    return net;
}

}  // namespace detail

inline DynamicMapModel build_model(const ModelConfig& config) {
    if (config.contexts.empty()) throw ValidationError("build_model: context set must be nonempty");
    if (config.dims.overhead == 0 || config.dims.places == 0 || config.dims.transient == 0) {
        throw ValidationError("build_model: dimensions must be positive");
    }
    DynamicMapModel m;
    m.config = config;
    Rng rng(derive_seed(config.hyper.seed, "init"));
    const size_t est_in = kContextEmbedDim * config.contexts.count();
    if (config.contexts.sat) {
        m.sat_head_places = detail::make_sat_head(config.dims.overhead, rng);
        m.sat_head_transient = detail::make_sat_head(config.dims.overhead, rng);
    }
    if (config.contexts.time) m.time_encoder = detail::make_encoder(2, rng);
    if (config.contexts.loc) m.loc_encoder = detail::make_encoder(3, rng);
    m.places_estimator = detail::make_estimator(est_in, config.dims.places, nn::Activation::Softmax, rng);
    m.transient_estimator =
        detail::make_estimator(est_in, config.dims.transient, nn::Activation::Sigmoid, rng);
    return m;
}

// Enabled networks in the fixed flattening order used by training and
// checkpoints.
inline std::vector<std::pair<std::string, nn::Mlp*>> named_networks(DynamicMapModel& m) {
    std::vector<std::pair<std::string, nn::Mlp*>> nets;
    if (m.config.contexts.sat) {
        nets.emplace_back("sat_head_places", &m.sat_head_places);
        nets.emplace_back("sat_head_transient", &m.sat_head_transient);
    }
    if (m.config.contexts.time) nets.emplace_back("time_encoder", &m.time_encoder);
    if (m.config.contexts.loc) nets.emplace_back("loc_encoder", &m.loc_encoder);
    nets.emplace_back("places_estimator", &m.places_estimator);
    nets.emplace_back("transient_estimator", &m.transient_estimator);
    return nets;
}

namespace detail {

struct ForwardState {
    nn::Tape tape_time, tape_loc, tape_sat_p, tape_sat_t, tape_est_p, tape_est_t;
    nn::Vec time_in, loc_in;
    nn::Vec concat_p, concat_t;
    nn::Vec places_out, transient_out;
};

inline void model_forward(const DynamicMapModel& m, const ContextInputs& in, ForwardState& st) {
    const ContextSet& cs = m.config.contexts;
    if (cs.sat && in.overhead.values.size() != m.config.dims.overhead) {
        throw DimensionError("predict: overhead feature length mismatch");
    }
    const size_t width = kContextEmbedDim * cs.count();
    st.concat_p.clear();
    st.concat_t.clear();
    st.concat_p.reserve(width);
    st.concat_t.reserve(width);
    if (cs.sat) {
        const nn::Vec& ep = nn::mlp_forward(m.sat_head_places, in.overhead.values, st.tape_sat_p);
        const nn::Vec& et = nn::mlp_forward(m.sat_head_transient, in.overhead.values, st.tape_sat_t);
        st.concat_p.insert(st.concat_p.end(), ep.begin(), ep.end());
        st.concat_t.insert(st.concat_t.end(), et.begin(), et.end());
    }
    if (cs.time) {
        st.time_in.assign(in.time_vec.begin(), in.time_vec.end());
        const nn::Vec& e = nn::mlp_forward(m.time_encoder, st.time_in, st.tape_time);
        st.concat_p.insert(st.concat_p.end(), e.begin(), e.end());
        st.concat_t.insert(st.concat_t.end(), e.begin(), e.end());
    }
    if (cs.loc) {
        st.loc_in.assign(in.loc_vec.begin(), in.loc_vec.end());
        const nn::Vec& e = nn::mlp_forward(m.loc_encoder, st.loc_in, st.tape_loc);
        st.concat_p.insert(st.concat_p.end(), e.begin(), e.end());
        st.concat_t.insert(st.concat_t.end(), e.begin(), e.end());
    }
    st.places_out = nn::mlp_forward(m.places_estimator, st.concat_p, st.tape_est_p);
    st.transient_out = nn::mlp_forward(m.transient_estimator, st.concat_t, st.tape_est_t);
}

}  // namespace detail

// Forward + reverse pass for one sample. Accumulates parameter gradients of
// kl_loss(places) + mse_loss(transient) into `grads` (ordered as
// named_networks) and returns the two loss values.
inline std::pair<double, double> accumulate_sample_gradients(const DynamicMapModel& model,
                                                             const ContextInputs& input,
                                                             const AttributeTargets& targets,
                                                             std::vector<nn::MlpGrads>& grads,
                                                             detail::ForwardState& st,
                                                             nn::Vec& logit_grad, nn::Vec& mse_grad) {
    detail::model_forward(model, input, st);
    const double kl = nn::kl_loss(targets.places, st.places_out, logit_grad);
    const double mse = nn::mse_loss(targets.transient, st.transient_out, mse_grad);

    const ContextSet& cs = model.config.contexts;
    size_t gi = 0;  // mirrors named_networks order
    size_t gi_sat_p = 0, gi_sat_t = 0, gi_time = 0, gi_loc = 0;
    if (cs.sat) { gi_sat_p = gi++; gi_sat_t = gi++; }
    if (cs.time) gi_time = gi++;
    if (cs.loc) gi_loc = gi++;
    const size_t gi_est_p = gi++;
    const size_t gi_est_t = gi++;

    nn::Vec in_grad_p =
        nn::mlp_backward(model.places_estimator, st.tape_est_p, logit_grad, grads[gi_est_p]);
    nn::Vec in_grad_t =
        nn::mlp_backward(model.transient_estimator, st.tape_est_t, mse_grad, grads[gi_est_t]);
    size_t off = 0;
    if (cs.sat) {
        nn::Vec slice_p(in_grad_p.begin() + off, in_grad_p.begin() + off + kContextEmbedDim);
        nn::Vec slice_t(in_grad_t.begin() + off, in_grad_t.begin() + off + kContextEmbedDim);
        nn::mlp_backward(model.sat_head_places, st.tape_sat_p, slice_p, grads[gi_sat_p]);
        nn::mlp_backward(model.sat_head_transient, st.tape_sat_t, slice_t, grads[gi_sat_t]);
        off += kContextEmbedDim;
    }
    if (cs.time) {
        nn::Vec slice(kContextEmbedDim);
        for (size_t k = 0; k < kContextEmbedDim; ++k)
            slice[k] = in_grad_p[off + k] + in_grad_t[off + k];
        nn::mlp_backward(model.time_encoder, st.tape_time, slice, grads[gi_time]);
        off += kContextEmbedDim;
    }
    if (cs.loc) {
        nn::Vec slice(kContextEmbedDim);
        for (size_t k = 0; k < kContextEmbedDim; ++k)
            slice[k] = in_grad_p[off + k] + in_grad_t[off + k];
        nn::mlp_backward(model.loc_encoder, st.tape_loc, slice, grads[gi_loc]);
    }
    return {kl, mse};
}

inline AttributePrediction predict(const DynamicMapModel& m, const ContextInputs& in) {
    detail::ForwardState st;
    detail::model_forward(m, in, st);
    return {st.places_out, st.transient_out};
}

inline AttributePrediction predict_record(const DynamicMapModel& m, const SampleRecord& r) {
    return predict(m, build_context_inputs(r));
}

inline std::pair<DynamicMapModel, TrainingReport> train(DynamicMapModel model,
                                                        const Dataset& train_set) {
    if (train_set.records.empty()) throw ValidationError("train: empty training set");
    if (train_set.dims.overhead != model.config.dims.overhead ||
        train_set.dims.places != model.config.dims.places ||
        train_set.dims.transient != model.config.dims.transient) {
        throw DimensionError("train: dataset dimensions do not match model config");
    }
    const Hyperparams& hp = model.config.hyper;
    auto nets = named_networks(model);
    std::vector<const nn::Mlp*> net_ptrs;
    for (auto& [name, net] : nets) net_ptrs.push_back(net);

    std::vector<nn::MlpGrads> grads;
    grads.reserve(nets.size());
    size_t n_params = 0;
    for (auto& [name, net] : nets) {
        grads.emplace_back(*net);
        for (const auto& l : net->layers) n_params += l.weights.data.size() + l.biases.size();
    }
    nn::AdamState adam(n_params, hp.lr);
    nn::Vec flat_params(n_params), flat_grads(n_params);

    std::vector<ContextInputs> inputs;
    inputs.reserve(train_set.records.size());
    for (const auto& r : train_set.records) inputs.push_back(build_context_inputs(r));

    TrainingReport report;
    detail::ForwardState st;
    nn::Vec logit_grad, mse_grad;
    std::vector<size_t> order(train_set.records.size());
    std::iota(order.begin(), order.end(), 0);

    for (size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(hp.seed, "epoch", epoch));
        for (size_t i = order.size() - 1; i > 0; --i) {
            size_t j = shuffle_rng.uniform_int(i + 1);
            std::swap(order[i], order[j]);
        }
        double epoch_kl = 0.0, epoch_mse = 0.0, epoch_l2 = 0.0;
        size_t n_batches = 0;
        for (size_t start = 0; start < order.size(); start += hp.batch) {
            const size_t end = std::min(start + hp.batch, order.size());
            const double inv_b = 1.0 / static_cast<double>(end - start);
            for (auto& g : grads) g.zero();
            for (size_t bi = start; bi < end; ++bi) {
                const SampleRecord& r = train_set.records[order[bi]];
                const auto [kl, mse] = accumulate_sample_gradients(model, inputs[order[bi]],
                                                                  r.targets, grads, st, logit_grad,
                                                                  mse_grad);
                epoch_kl += kl;
                epoch_mse += mse;
            }
            // batch mean + L2 contribution on weights (biases excluded)
            size_t ni = 0;
            for (auto& [name, net] : nets) {
                auto& g = grads[ni++];
                for (size_t li = 0; li < net->layers.size(); ++li) {
                    auto& dw = g.d_weights[li].data;
                    const auto& w = net->layers[li].weights.data;
                    for (size_t k = 0; k < dw.size(); ++k)
                        dw[k] = dw[k] * inv_b + 2.0 * hp.l2 * w[k];
                    for (double& x : g.d_biases[li]) x *= inv_b;
                }
            }
            epoch_l2 += nn::l2_penalty(net_ptrs, hp.l2);
            ++n_batches;

            // flatten, one Adam step, unflatten
            size_t off = 0;
            ni = 0;
            for (auto& [name, net] : nets) {
                auto& g = grads[ni++];
                for (size_t li = 0; li < net->layers.size(); ++li) {
                    auto& w = net->layers[li].weights.data;
                    std::copy(w.begin(), w.end(), flat_params.begin() + off);
                    std::copy(g.d_weights[li].data.begin(), g.d_weights[li].data.end(),
                              flat_grads.begin() + off);
                    off += w.size();
                    auto& b = net->layers[li].biases;
                    std::copy(b.begin(), b.end(), flat_params.begin() + off);
                    std::copy(g.d_biases[li].begin(), g.d_biases[li].end(), flat_grads.begin() + off);
                    off += b.size();
                }
            }
            nn::adam_step(adam, flat_params.data(), flat_grads.data(), n_params);
            off = 0;
            for (auto& [name, net] : nets) {
                for (auto& l : net->layers) {
                    std::copy(flat_params.begin() + off, flat_params.begin() + off + l.weights.data.size(),
                              l.weights.data.begin());
                    off += l.weights.data.size();
                    std::copy(flat_params.begin() + off, flat_params.begin() + off + l.biases.size(),
                              l.biases.begin());
                    off += l.biases.size();
                }
            }
        }
        const double n = static_cast<double>(train_set.records.size());
        report.places_loss.push_back(epoch_kl / n);
        report.transient_loss.push_back(epoch_mse / n);
        report.total_loss.push_back(epoch_kl / n + epoch_mse / n +
                                    epoch_l2 / static_cast<double>(n_batches));
    }
    return {std::move(model), std::move(report)};
}

// ---- checkpoint serialization -----------------------------------------------

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline const char* activation_name(nn::Activation a) {
    switch (a) {
        case nn::Activation::Relu: return "relu";
        case nn::Activation::Identity: return "identity";
        case nn::Activation::Softmax: return "softmax";
        case nn::Activation::Sigmoid: return "sigmoid";
    }
    return "identity";
}

inline nn::Activation activation_from_name(const std::string& s) {
    if (s == "relu") return nn::Activation::Relu;
    if (s == "identity") return nn::Activation::Identity;
    if (s == "softmax") return nn::Activation::Softmax;
    if (s == "sigmoid") return nn::Activation::Sigmoid;
    throw IoError("checkpoint: unknown activation '" + s + "'");
}

inline nlohmann::json net_to_json(const nn::Mlp& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers) {
        layers.push_back({{"in", l.in_dim()},
                          {"out", l.out_dim()},
                          {"activation", activation_name(l.activation)},
                          {"weights", l.weights.data},
                          {"biases", l.biases}});
    }
    return layers;
}

inline nn::Mlp net_from_json(const nlohmann::json& j) {
    nn::Mlp net;
    for (const auto& lj : j) {
        nn::DenseLayer l;
        const size_t in = lj.at("in").get<size_t>();
        const size_t out = lj.at("out").get<size_t>();
        l.weights = nn::Matrix(out, in);
        auto w = lj.at("weights").get<std::vector<double>>();
        if (w.size() != in * out) throw IoError("checkpoint: weight array size mismatch");
        l.weights.data = std::move(w);
        l.biases = lj.at("biases").get<std::vector<double>>();
        if (l.biases.size() != out) throw IoError("checkpoint: bias array size mismatch");
        l.activation = activation_from_name(lj.at("activation").get<std::string>());
        net.layers.push_back(std::move(l));
    }
    if (net.layers.empty()) throw IoError("checkpoint: empty network");
    return net;
}

}  // namespace detail

inline void save_checkpoint(DynamicMapModel& m, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["config"] = {{"contexts", m.config.contexts.to_string()},
                   {"dims",
                    {{"overhead", m.config.dims.overhead},
                     {"places", m.config.dims.places},
                     {"transient", m.config.dims.transient}}},
                   {"hyper",
                    {{"lr", m.config.hyper.lr},
                     {"batch", m.config.hyper.batch},
                     {"epochs", m.config.hyper.epochs},
                     {"l2", m.config.hyper.l2},
                     {"seed", m.config.hyper.seed}}}};
    nlohmann::json nets;
    for (auto& [name, net] : named_networks(m)) nets[name] = detail::net_to_json(*net);
    j["networks"] = std::move(nets);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("checkpoint write failed: " + path);
}

inline DynamicMapModel load_checkpoint(const std::string& path,
                                       std::optional<Dims> expected_dims = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint parse error in " + path + ": " + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != kCheckpointVersion) {
            throw IoError("checkpoint: unsupported format_version");
        }
        DynamicMapModel m;
        const auto& cj = j.at("config");
        m.config.contexts = ContextSet::parse(cj.at("contexts").get<std::string>());
        if (m.config.contexts.empty()) throw IoError("checkpoint: empty context set");
        const auto& dj = cj.at("dims");
        m.config.dims.overhead = dj.at("overhead").get<size_t>();
        m.config.dims.places = dj.at("places").get<size_t>();
        m.config.dims.transient = dj.at("transient").get<size_t>();
        const auto& hj = cj.at("hyper");
        m.config.hyper.lr = hj.at("lr").get<double>();
        m.config.hyper.batch = hj.at("batch").get<size_t>();
        m.config.hyper.epochs = hj.at("epochs").get<size_t>();
        m.config.hyper.l2 = hj.at("l2").get<double>();
        m.config.hyper.seed = hj.at("seed").get<uint64_t>();
        if (expected_dims) {
            if (expected_dims->overhead != m.config.dims.overhead ||
                expected_dims->places != m.config.dims.places ||
                expected_dims->transient != m.config.dims.transient) {
                throw DimensionError("checkpoint dimensions do not match expected dimensions");
            }
        }
        const auto& nets = j.at("networks");
        for (auto& [name, net] : named_networks(m)) {
            if (!nets.contains(name)) throw IoError("checkpoint: missing network '" + name + "'");
            *net = detail::net_from_json(nets.at(name));
        }
        // structural sanity: estimator input width must match enabled contexts
        const size_t est_in = kContextEmbedDim * m.config.contexts.count();
        if (m.places_estimator.in_dim() != est_in || m.transient_estimator.in_dim() != est_in) {
            throw IoError("checkpoint: estimator width inconsistent with context set");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint: bad structure in " + path + ": " + e.what());
    }
}

}  // namespace dynmap
