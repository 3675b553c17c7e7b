// Copyright 2026 The clipce Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fame/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ame/ame.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace clipce::fame {

namespace {

void check_config(const AdapterConfig& c) {
  require(c.input_dim > 0 && c.hidden_dim > 0 && c.output_dim > 0, ErrorCode::kConfig,
          "adapter dimensions must be positive");
  require(c.learning_rate >= 0.0 && std::isfinite(c.learning_rate), ErrorCode::kConfig,
          "adapter learning rate must be finite and nonnegative");
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

Adapter::Adapter(AdapterConfig config)
    : config_(config),
      w1_(config.hidden_dim * config.input_dim, 0.0),
      b1_(config.hidden_dim, 0.0),
      w2_(config.output_dim * config.hidden_dim, 0.0),
      b2_(config.output_dim, 0.0) {
  check_config(config_);
}

Adapter Adapter::random(AdapterConfig config, std::uint64_t seed) {
  Adapter a(config);
  SplitMix64 rng(seed);
  const double l1 = std::sqrt(6.0 / static_cast<double>(config.input_dim));
  const double l2 = std::sqrt(6.0 / static_cast<double>(config.hidden_dim));
  for (double& w : a.w1_) w = rng.uniform(-l1, l1);
  for (double& w : a.w2_) w = rng.uniform(-l2, l2);
  return a;
}

Activations Adapter::forward(std::span<const double> visual, std::span<const double> roi) const {
  require(visual.size() + roi.size() == config_.input_dim, ErrorCode::kConfig,
          "adapter input dimension mismatch: expected " + std::to_string(config_.input_dim) + ", got " +
              std::to_string(visual.size() + roi.size()));
  const std::size_t n_in = config_.input_dim;
  const std::size_t n_hid = config_.hidden_dim;
  const std::size_t n_out = config_.output_dim;
  Activations act;
  act.input.reserve(n_in);
  act.input.insert(act.input.end(), visual.begin(), visual.end());
  act.input.insert(act.input.end(), roi.begin(), roi.end());
  // The rectifier maps NaN to 0, so bad inputs would otherwise vanish silently.
  for (double x : act.input) require(std::isfinite(x), ErrorCode::kNumeric, "adapter input has non-finite entries");
  act.hidden_pre.resize(n_hid);
  act.hidden.resize(n_hid);
  for (std::size_t h = 0; h < n_hid; ++h) {
    const double* row = &w1_[h * n_in];
    double s = b1_[h];
    for (std::size_t i = 0; i < n_in; ++i) s += row[i] * act.input[i];
    act.hidden_pre[h] = s;
    act.hidden[h] = relu(s);
  }
  act.output_pre.resize(n_out);
  act.output.resize(n_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = &w2_[o * n_hid];
    double s = b2_[o];
    for (std::size_t h = 0; h < n_hid; ++h) s += row[h] * act.hidden[h];
    act.output_pre[o] = s;
    act.output[o] = relu(s);
  }
  return act;
}

std::vector<double> Adapter::adapt(std::span<const double> visual, std::span<const double> roi) const {
  return forward(visual, roi).output;
}

void Adapter::apply_gradient(const AdapterGradient& grad, double learning_rate) {
  auto update = [learning_rate](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
  };
  update(w1_, grad.w1);
  update(b1_, grad.b1);
  update(w2_, grad.w2);
  update(b2_, grad.b2);
  ++step_count_;
}

std::size_t Adapter::parameter_count() const { return w1_.size() + b1_.size() + w2_.size() + b2_.size(); }

double Adapter::parameter(std::size_t i) const {
  for (const std::vector<double>* p : {&w1_, &b1_, &w2_, &b2_}) {
    if (i < p->size()) return (*p)[i];
    i -= p->size();
  }
  fail(ErrorCode::kInput, "parameter index out of range");
}

void Adapter::set_parameter(std::size_t i, double value) {
  for (std::vector<double>* p : {&w1_, &b1_, &w2_, &b2_}) {
    if (i < p->size()) {
      (*p)[i] = value;
      return;
    }
    i -= p->size();
  }
  fail(ErrorCode::kInput, "parameter index out of range");
}

std::vector<double> Adapter::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const std::vector<double>* p : {&w1_, &b1_, &w2_, &b2_}) out.insert(out.end(), p->begin(), p->end());
  return out;
}

Json Adapter::to_json() const {
  return Json{{"schema", "adapter/v1"},
              {"input_dim", config_.input_dim},
              {"hidden_dim", config_.hidden_dim},
              {"output_dim", config_.output_dim},
              {"learning_rate", config_.learning_rate},
              {"step_count", step_count_},
              {"parameters", {{"w1", w1_}, {"b1", b1_}, {"w2", w2_}, {"b2", b2_}}}};
}

Adapter Adapter::from_json(const Json& j) {
  try {
    require(j.value("schema", "") == "adapter/v1", ErrorCode::kParse, "not an adapter checkpoint");
    AdapterConfig c{j.at("input_dim").get<std::size_t>(), j.at("hidden_dim").get<std::size_t>(),
                    j.at("output_dim").get<std::size_t>(), j.at("learning_rate").get<double>()};
    Adapter a(c);
    const Json& p = j.at("parameters");
    auto load = [&p](const char* key, std::vector<double>& dst) {
      std::vector<double> v = p.at(key).get<std::vector<double>>();
      require(v.size() == dst.size(), ErrorCode::kParse, std::string("adapter parameter size mismatch for ") + key);
      dst = std::move(v);
    };
    load("w1", a.w1_);
    load("b1", a.b1_);
    load("w2", a.w2_);
    load("b2", a.b2_);
    a.step_count_ = j.at("step_count").get<std::uint64_t>();
    return a;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParse, std::string("malformed adapter checkpoint: ") + e.what());
  }
}

void Adapter::save(const std::filesystem::path& path) const { write_text(path, to_json().dump() + "\n"); }

Adapter Adapter::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

double offset_weight(std::span<const double> adapted, std::span<const double> t_pos, std::span<const double> t_neg) {
  for (double x : adapted) require(std::isfinite(x), ErrorCode::kNumeric, "adapted embedding has non-finite entries");
  return ame::negative_score(ame::similarity(adapted, t_pos), ame::similarity(adapted, t_neg));
}

int soft_label(double p_t, const SoftLabelParams& params) {
  require(p_t >= 0.0 && p_t <= 1.0, ErrorCode::kInput, "p_t must lie in [0, 1]");
  require(params.theta > 0.0 && params.theta < 1.0, ErrorCode::kConfig, "theta must lie in (0, 1)");
  return p_t > params.theta ? 0 : 1;
}

double adapter_loss(int u, double w_offset) {
  require(u == 0 || u == 1, ErrorCode::kInput, "soft label must be 0 or 1");
  const double w = std::clamp(w_offset, kClampEpsilon, 1.0 - kClampEpsilon);
  return u == 1 ? -std::log(w) : -std::log(1.0 - w);
}

double fame_weight(double w_ame, double w_offset) {
  require(w_ame > 0.0 && w_ame < 1.0 && w_offset > 0.0 && w_offset < 1.0, ErrorCode::kInput,
          "fame_weight inputs must lie in (0, 1)");
  return 0.5 * (w_ame + w_offset);
}

double adapter_batch_loss(const Adapter& adapter, std::span<const AdapterSample> batch, const SoftLabelParams& params,
                          AdapterGradient* grad) {
  require(!batch.empty(), ErrorCode::kInput, "adapter batch must be nonempty");
  const AdapterConfig& c = adapter.config();
  if (grad) {
    grad->w1.assign(adapter.w1().size(), 0.0);
    grad->b1.assign(adapter.b1().size(), 0.0);
    grad->w2.assign(adapter.w2().size(), 0.0);
    grad->b2.assign(adapter.b2().size(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> d_out(c.output_dim);
  std::vector<double> d_hidden(c.hidden_dim);
  for (const AdapterSample& s : batch) {
    require(s.t_pos.size() == c.output_dim && s.t_neg.size() == c.output_dim, ErrorCode::kConfig,
            "text embedding dimension does not match adapter output");
    Activations act = adapter.forward(s.visual, s.roi);
    const double w = offset_weight(act.output, s.t_pos, s.t_neg);
    const int u = soft_label(s.p_t, params);
    total += adapter_loss(u, w);
    if (!grad) continue;
    // d loss / d (sim_neg - sim_pos); zero where the clamp is active.
    const bool clamped = w <= kClampEpsilon || w >= 1.0 - kClampEpsilon;
    const double dz = clamped ? 0.0 : (w - u) * inv_n;
    if (dz == 0.0) continue;
    for (std::size_t o = 0; o < c.output_dim; ++o) {
      d_out[o] = act.output_pre[o] > 0.0 ? dz * (s.t_neg[o] - s.t_pos[o]) : 0.0;
    }
    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (std::size_t o = 0; o < c.output_dim; ++o) {
      if (d_out[o] == 0.0) continue;
      grad->b2[o] += d_out[o];
      const double* row = &adapter.w2()[o * c.hidden_dim];
      double* grow = &grad->w2[o * c.hidden_dim];
      for (std::size_t h = 0; h < c.hidden_dim; ++h) {
        grow[h] += d_out[o] * act.hidden[h];
        d_hidden[h] += row[h] * d_out[o];
      }
    }
    for (std::size_t h = 0; h < c.hidden_dim; ++h) {
      if (act.hidden_pre[h] <= 0.0 || d_hidden[h] == 0.0) continue;
      grad->b1[h] += d_hidden[h];
      double* grow = &grad->w1[h * c.input_dim];
      for (std::size_t i = 0; i < c.input_dim; ++i) grow[i] += d_hidden[h] * act.input[i];
    }
  }
  return total * inv_n;
}

double adapter_step(Adapter& adapter, std::span<const AdapterSample> batch, const SoftLabelParams& params) {
  AdapterGradient grad;
  const double loss = adapter_batch_loss(adapter, batch, params, &grad);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "adapter loss is non-finite (" << loss << ") over a batch of " << batch.size() << " after "
        << adapter.step_count() << " steps; step aborted";
    fail(ErrorCode::kNumeric, msg.str());
  }
  adapter.apply_gradient(grad, adapter.config().learning_rate);
  return loss;
}

}  // namespace clipce::fame
