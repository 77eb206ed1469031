#include "beac/model.hpp"

#include <stdexcept>

#include "beac/rng.hpp"

namespace beac::model {

using nlohmann::json;

namespace {

struct NamedVariant {
  const char* name;
  const char* display;
  MethodVariant flags;
};

const NamedVariant kVariants[] = {
    {"ours", "Ours", {true, true, true, true}},
    {"ours_wo_past", "Ours w/o past", {true, true, true, false}},
    {"ours_wo_future", "Ours w/o future", {true, true, false, true}},
    {"ours_wo_reg", "Ours w/o reg", {true, true, false, false}},
    {"bc_w_switch", "BC w/ switch", {true, false, false, false}},
    {"bc_w_belief", "BC w/ belief", {false, true, false, false}},
    {"bc", "BC", {false, false, false, false}},
};

const NamedVariant& lookup(const MethodVariant& v) {
  for (const auto& nv : kVariants)
    if (nv.flags == v) return nv;
  throw std::invalid_argument("method variant flags do not match any known configuration");
}

}  // namespace

MethodVariant MethodVariant::from_name(const std::string& name) {
  for (const auto& nv : kVariants)
    if (name == nv.name) return nv.flags;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

const std::vector<std::string>& MethodVariant::table_order() {
  static const std::vector<std::string> order = [] {
    std::vector<std::string> v;
    for (const auto& nv : kVariants) v.emplace_back(nv.name);
    return v;
  }();
  return order;
}

std::string MethodVariant::name() const { return lookup(*this).name; }
std::string MethodVariant::display_name() const { return lookup(*this).display; }

void MethodVariant::validate() const {
  if ((future_reg || past_reg) && !belief_estimation) {
    throw std::invalid_argument("future/past regularization requires belief estimation");
  }
}

void TrainConfig::validate() const {
  auto req = [](bool ok, const char* field, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("train config field '") + field + "' " + what);
  };
  req(alpha >= 0.0, "alpha", "must be >= 0");
  req(beta >= 0.0, "beta", "must be >= 0");
  req(gamma >= 0.0, "gamma", "must be >= 0");
  req(k >= 1, "k", "must be >= 1");
  req(learning_rate > 0.0, "learning_rate", "must be > 0");
  req(epochs >= 1, "epochs", "must be >= 1");
  req(batch_size >= 1, "batch_size", "must be >= 1");
  req(hidden >= 1, "hidden", "must be >= 1");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"alpha", c.alpha},       {"beta", c.beta},
           {"gamma", c.gamma},       {"k", c.k},
           {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
           {"batch_size", c.batch_size}, {"seed", c.seed},
           {"grad_clip", c.grad_clip}, {"hidden", c.hidden}};
}

void from_json(const json& j, TrainConfig& c) {
  TrainConfig d;
  auto num = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw std::invalid_argument(std::string("train config field '") + key + "' must be a number");
    return j.at(key).get<double>();
  };
  auto integer = [&](const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw std::invalid_argument(std::string("train config field '") + key + "' must be an integer");
    return j.at(key).get<int>();
  };
  c.alpha = num("alpha", d.alpha);
  c.beta = num("beta", d.beta);
  c.gamma = num("gamma", d.gamma);
  c.k = integer("k", d.k);
  c.learning_rate = num("learning_rate", d.learning_rate);
  c.epochs = integer("epochs", d.epochs);
  c.batch_size = integer("batch_size", d.batch_size);
  if (j.contains("seed") && !j.at("seed").is_number_unsigned())
    throw std::invalid_argument("train config field 'seed' must be a non-negative integer");
  c.seed = j.value("seed", d.seed);
  c.grad_clip = num("grad_clip", d.grad_clip);
  c.hidden = integer("hidden", d.hidden);
}

std::size_t BeacModel::feature_dim() const {
  return variant_.belief_estimation ? static_cast<std::size_t>(config_.hidden) : env::kObsDim;
}

BeacModel BeacModel::create(const MethodVariant& variant, const TrainConfig& config,
                            const demo::NormalizationStats& stats) {
  variant.validate();
  config.validate();
  BeacModel m;
  m.variant_ = variant;
  m.config_ = config;
  m.stats_ = stats;
  Rng rng(mix_seed(config.seed, 0xbeac));
  const auto h = static_cast<std::size_t>(config.hidden);
  const auto feat = m.feature_dim();
  if (variant.belief_estimation) {
    const auto in = m.encoder_input_dim();
    m.params_.emplace("encoder.wx", ad::uniform_init(in, 4 * h, h, rng));
    m.params_.emplace("encoder.bx", ad::uniform_init(1, 4 * h, h, rng));
    m.params_.emplace("encoder.wh", ad::uniform_init(h, 4 * h, h, rng));
    m.params_.emplace("encoder.bh", ad::uniform_init(1, 4 * h, h, rng));
  }
  ad::add_dense(m.params_, "action.0", feat, h, rng);
  ad::add_dense(m.params_, "action.1", h, h, rng);
  ad::add_dense(m.params_, "action.2", h, env::kActDim, rng);
  if (variant.mode_switching) {
    ad::add_dense(m.params_, "mode.0", feat, h, rng);
    ad::add_dense(m.params_, "mode.1", h, 1, rng);
  }
  const auto dec_in = h + env::kActDim * static_cast<std::size_t>(config.k);
  if (variant.future_reg) {
    ad::add_dense(m.params_, "future.0", dec_in, h, rng);
    ad::add_dense(m.params_, "future.1", h, env::kObsDim, rng);
  }
  if (variant.past_reg) {
    ad::add_dense(m.params_, "past.0", dec_in, h, rng);
    ad::add_dense(m.params_, "past.1", h, env::kObsDim, rng);
  }
  return m;
}

ad::Checkpoint BeacModel::to_checkpoint(const json& provenance) const {
  ad::Checkpoint c;
  c.meta = json{{"schema_version", 1},
                {"variant", variant_.name()},
                {"architecture",
                 {{"hidden", config_.hidden},
                  {"obs_dim", env::kObsDim},
                  {"act_dim", env::kActDim},
                  {"k", config_.k},
                  {"mode_switching", variant_.mode_switching},
                  {"belief_estimation", variant_.belief_estimation},
                  {"future_reg", variant_.future_reg},
                  {"past_reg", variant_.past_reg}}},
                {"train_config", config_},
                {"normalization_stats", stats_},
                {"provenance", provenance}};
  c.tensors = params_;
  return c;
}

BeacModel BeacModel::from_checkpoint(const ad::Checkpoint& ckpt) {
  const auto& meta = ckpt.meta;
  BeacModel m;
  const auto& arch = meta.at("architecture");
  m.variant_.mode_switching = arch.at("mode_switching").get<bool>();
  m.variant_.belief_estimation = arch.at("belief_estimation").get<bool>();
  m.variant_.future_reg = arch.at("future_reg").get<bool>();
  m.variant_.past_reg = arch.at("past_reg").get<bool>();
  m.variant_.validate();
  if (meta.at("variant").get<std::string>() != m.variant_.name()) {
    throw ad::CheckpointError("checkpoint variant name disagrees with its architecture flags");
  }
  m.config_ = meta.at("train_config").get<TrainConfig>();
  m.stats_ = meta.at("normalization_stats").get<demo::NormalizationStats>();
  // Rebuild the expected layout and check every tensor is present with the right shape.
  const auto expected = create(m.variant_, m.config_, m.stats_).params_;
  for (const auto& [name, t] : expected) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) throw ad::CheckpointError("checkpoint missing tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ad::CheckpointError("checkpoint tensor '" + name + "' has shape " + shape_string(it->second.shape()) +
                                ", expected " + shape_string(t.shape()));
    }
  }
  if (ckpt.tensors.size() != expected.size()) throw ad::CheckpointError("checkpoint has unexpected extra tensors");
  m.params_ = ckpt.tensors;
  return m;
}

namespace graph {

LstmState lstm_step(ad::Graph& g, ad::NodeId xw, LstmState prev, std::size_t hidden) {
  const auto h = hidden;
  const auto pre = g.add(xw, g.add(g.matmul(prev.h, g.parameter("encoder.wh")), g.parameter("encoder.bh")));
  // Gate columns: input, forget, output (sigmoid), then the candidate (tanh).
  const auto ifo = g.sigmoid(g.slice_cols(pre, 0, 3 * h));
  const auto cand = g.tanh(g.slice_cols(pre, 3 * h, 4 * h));
  const auto c = g.add(g.mul(g.slice_cols(ifo, h, 2 * h), prev.c), g.mul(g.slice_cols(ifo, 0, h), cand));
  return {g.mul(g.slice_cols(ifo, 2 * h, 3 * h), g.tanh(c)), c};
}

ad::NodeId mlp(ad::Graph& g, const std::string& prefix, ad::NodeId x, std::size_t layers) {
  auto cur = x;
  for (std::size_t i = 0; i < layers; ++i) {
    const auto p = prefix + "." + std::to_string(i);
    cur = g.add(g.matmul(cur, g.parameter(p + ".w")), g.parameter(p + ".b"));
    if (i + 1 < layers) cur = g.tanh(cur);
  }
  return cur;
}

}  // namespace graph

std::array<double, env::kObsDim + env::kActDim> encoder_input(const demo::NormalizationStats& stats,
                                                              const env::Observation& obs,
                                                              const env::Action& prev_action) {
  std::array<double, env::kObsDim + env::kActDim> x{};
  const auto o = stats.normalize(obs);
  const auto a = stats.normalize(prev_action);
  std::copy(o.begin(), o.end(), x.begin());
  std::copy(a.begin(), a.end(), x.begin() + env::kObsDim);
  return x;
}

BeliefTracker::BeliefTracker(const BeacModel& model) : model_(&model) { reset(); }

void BeliefTracker::reset() {
  hidden_.assign(static_cast<std::size_t>(model_->hidden()), 0.0);
  cell_.assign(hidden_.size(), 0.0);
  belief_.values.clear();
}

const BeliefState& BeliefTracker::update(const env::Observation& obs, const env::Action& prev_action) {
  if (!model_->variant().belief_estimation) {
    const auto o = model_->stats().normalize(obs);
    belief_.values.assign(o.begin(), o.end());
    return belief_;
  }
  const auto x = encoder_input(model_->stats(), obs, prev_action);
  const auto h = static_cast<std::size_t>(model_->hidden());
  ad::Graph g;
  const auto xn = g.constant(Tensor({1, x.size()}, std::vector<double>(x.begin(), x.end())));
  const auto xw = g.add(g.matmul(xn, g.parameter("encoder.wx")), g.parameter("encoder.bx"));
  const auto next = graph::lstm_step(g, xw, {g.constant(Tensor({1, h}, hidden_)), g.constant(Tensor({1, h}, cell_))}, h);
  g.forward(model_->params());
  hidden_ = g.value(next.h).to_vector();
  cell_ = g.value(next.c).to_vector();
  belief_.values = hidden_;
  return belief_;
}

std::vector<BeliefState> encode_beliefs(std::span<const env::Observation> obs, std::span<const env::Action> actions,
                                        const BeacModel& model) {
  if (obs.empty()) throw std::invalid_argument("encode_belief: empty observation history");
  if (obs.size() != actions.size() + 1 && obs.size() != actions.size()) {
    throw std::invalid_argument("encode_belief: histories misaligned (need |obs| = |actions| + 1)");
  }
  BeliefTracker tracker(model);
  std::vector<BeliefState> out;
  out.reserve(obs.size());
  for (std::size_t t = 0; t < obs.size(); ++t) {
    const env::Action prev = t == 0 ? env::Action{} : actions[t - 1];
    out.push_back(tracker.update(obs[t], prev));
  }
  return out;
}

BeliefState encode_belief(std::span<const env::Observation> obs, std::span<const env::Action> actions,
                          const BeacModel& model) {
  return encode_beliefs(obs, actions, model).back();
}

namespace {

void check_feature(const BeliefState& b, const BeacModel& model) {
  if (b.values.size() != model.feature_dim()) {
    throw ShapeError("belief has dimension " + std::to_string(b.values.size()) + ", model expects " +
                     std::to_string(model.feature_dim()));
  }
}

Tensor row_of(const std::vector<double>& v) { return Tensor({1, v.size()}, v); }

std::array<double, env::kObsDim> run_decoder(const char* prefix, const BeliefState& belief,
                                             std::span<const env::Action> actions, const BeacModel& model,
                                             bool enabled) {
  if (!enabled) throw std::logic_error(std::string(prefix) + " decoder is disabled for this variant");
  if (actions.size() != static_cast<std::size_t>(model.k())) {
    throw std::invalid_argument(std::string(prefix) + " decoder needs exactly k=" + std::to_string(model.k()) +
                                " actions, got " + std::to_string(actions.size()));
  }
  check_feature(belief, model);
  std::vector<double> in = belief.values;
  for (const auto& a : actions) {
    const auto z = model.stats().normalize(a);
    in.insert(in.end(), z.begin(), z.end());
  }
  ad::Graph g;
  graph::mlp(g, prefix, g.constant(row_of(in)), kDecoderLayers);
  const auto out = g.forward(model.params()).to_vector();
  std::array<double, env::kObsDim> r{};
  std::copy(out.begin(), out.end(), r.begin());
  return r;
}

}  // namespace

double predict_mode(const BeliefState& belief, const BeacModel& model) {
  if (!model.variant().mode_switching) throw std::logic_error("variant has no mode head");
  check_feature(belief, model);
  ad::Graph g;
  g.sigmoid(graph::mlp(g, "mode", g.constant(row_of(belief.values)), kModeLayers));
  return g.forward(model.params()).item();
}

std::array<double, env::kActDim> predict_action(const BeliefState& belief, const BeacModel& model) {
  check_feature(belief, model);
  ad::Graph g;
  graph::mlp(g, "action", g.constant(row_of(belief.values)), kActionLayers);
  const auto out = g.forward(model.params());
  return {out[0], out[1]};
}

std::array<double, env::kObsDim> decode_future(const BeliefState& belief, std::span<const env::Action> actions,
                                               const BeacModel& model) {
  return run_decoder("future", belief, actions, model, model.variant().future_reg);
}

std::array<double, env::kObsDim> decode_past(const BeliefState& belief, std::span<const env::Action> actions,
                                             const BeacModel& model) {
  return run_decoder("past", belief, actions, model, model.variant().past_reg);
}

}  // namespace beac::model
