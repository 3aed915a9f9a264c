#include "coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "errors.hpp"
#include "run_trace.hpp"

namespace pevsched {

MessageCount message_count(const Network& network) {
  MessageCount c;
  c.downstream_messages = network.pev_count();
  c.upstream_announcements = network.pev_count();
  for (std::size_t k = 0; k < network.pev_count(); ++k) c.downstream_hops += network.path(k).size();
  return c;
}

std::vector<double> Coordinator::FeederAgent::load() const {
  std::vector<double> sum(headroom.size(), 0.0);
  for (const auto& row : member_profiles) {
    for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += row[t];
  }
  return sum;
}

Coordinator::Coordinator(const Network& network, std::span<const PevSpec> fleet, CoordinationMode mode, double step,
                         ProjectionOptions projection)
    : network_(&network), mode_(mode), step_(step), projection_(projection) {
  if (fleet.size() != network.pev_count()) throw ConfigurationError("fleet does not match the network");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigurationError("step size must be positive");
  const std::size_t T = network.horizon();
  substation_profiles_.assign(fleet.size(), std::vector<double>(T, 0.0));
  for (std::size_t l = 0; l < network.feeder_count(); ++l) {
    FeederAgent f;
    f.index = l;
    f.members.assign(network.members(l).begin(), network.members(l).end());
    f.headroom.assign(network.headroom(l).begin(), network.headroom(l).end());
    f.member_profiles.assign(f.members.size(), std::vector<double>(T, 0.0));
    feeders_.push_back(std::move(f));
  }
  for (const auto& pev : fleet) {
    VehicleAgent v;
    v.spec = &pev;
    v.profile.assign(T, 0.0);
    vehicles_.push_back(std::move(v));
  }
}

Coordinator Coordinator::penalty(const Network& network, std::span<const PevSpec> fleet, OverloadCost cost,
                                 double step, ProjectionOptions projection) {
  if (cost.feeders.size() != network.feeder_count()) {
    throw ConfigurationError("overload cost must define one penalty per feeder");
  }
  Coordinator c(network, fleet, CoordinationMode::penalty, step, projection);
  for (std::size_t l = 0; l < c.feeders_.size(); ++l) c.feeders_[l].cost = cost.feeders[l];
  return c;
}

Coordinator Coordinator::primal_dual(const Network& network, std::span<const PevSpec> fleet, double step,
                                     double mu_max, ProjectionOptions projection, double initial_multiplier) {
  if (!(mu_max > 0.0)) throw ConfigurationError("multiplier cap must be positive");
  Coordinator c(network, fleet, CoordinationMode::primal_dual, step, projection);
  c.mu_max_ = mu_max;
  const double start = std::clamp(initial_multiplier, 0.0, mu_max);
  for (auto& f : c.feeders_) f.mu.assign(network.horizon(), start);
  c.reset_profiles(initial_primal(network, fleet, projection));
  return c;
}

void Coordinator::reset_profiles(const ProfileSet& profiles) {
  if (profiles.pev_count() != vehicles_.size() || profiles.horizon() != network_->horizon()) {
    throw ConfigurationError("profile set does not match the fleet");
  }
  for (std::size_t k = 0; k < vehicles_.size(); ++k) {
    const auto row = profiles.row(k);
    vehicles_[k].profile.assign(row.begin(), row.end());
    substation_profiles_[k].assign(row.begin(), row.end());
  }
  for (auto& f : feeders_) {
    for (std::size_t i = 0; i < f.members.size(); ++i) {
      const auto row = profiles.row(f.members[i]);
      f.member_profiles[i].assign(row.begin(), row.end());
    }
  }
}

std::vector<double> Coordinator::feedback_terms(const FeederAgent& feeder, const std::vector<double>& load) const {
  if (mode_ == CoordinationMode::primal_dual) return feeder.mu;
  std::vector<double> term(load.size());
  for (std::size_t t = 0; t < load.size(); ++t) term[t] = feeder.cost.derivative(load[t] - feeder.headroom[t]);
  return term;
}

std::vector<double> Coordinator::feeder_term(std::size_t l) const {
  const auto& f = feeders_.at(l);
  return feedback_terms(f, f.load());
}

void Coordinator::run_round() {
  const std::size_t T = network_->horizon();
  const std::size_t K = vehicles_.size();
  RoundEvent event;
  event.round = rounds_ + 1;

  // Substation: aggregate the announced profiles.
  std::vector<double> aggregate(T, 0.0);
  for (const auto& row : substation_profiles_) {
    for (std::size_t t = 0; t < T; ++t) aggregate[t] += row[t];
  }
  if (mode_ == CoordinationMode::primal_dual) {
    ProfileSet seen(K, T);
    for (std::size_t k = 0; k < K; ++k) std::copy(substation_profiles_[k].begin(), substation_profiles_[k].end(), seen.row(k).begin());
    average_.add(seen);
  }

  // Feeders: each fixes this round's term from its own view, and in
  // primal-dual mode prepares the local multiplier step from the same load.
  std::vector<std::vector<double>> terms(feeders_.size());
  for (auto& f : feeders_) {
    const std::vector<double> load = f.load();
    terms[f.index] = feedback_terms(f, load);
    if (mode_ == CoordinationMode::primal_dual) {
      f.pending_mu.resize(T);
      for (std::size_t t = 0; t < T; ++t) {
        f.pending_mu[t] = std::max(std::min(f.mu[t] + step_ * (load[t] - f.headroom[t]), mu_max_), 0.0);
      }
    }
  }

  // Downstream: seed, accumulate root to leaf, deliver, project.
  const auto D = network_->total_base_load();
  std::vector<ProfileAnnouncement> announcements;
  announcements.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    FeedbackMessage msg;
    msg.pev = k;
    msg.accumulator.resize(T);
    for (std::size_t t = 0; t < T; ++t) msg.accumulator[t] = 2.0 * (D[t] + aggregate[t]);
    for (std::size_t l : network_->path(k)) {
      const auto& term = terms[l];
      for (std::size_t t = 0; t < T; ++t) msg.accumulator[t] += term[t];
      ++msg.hops;
    }
    ++event.messages.downstream_messages;
    event.messages.downstream_hops += msg.hops;
    for (double a : msg.accumulator) event.max_accumulator = std::max(event.max_accumulator, std::abs(a));

    auto& v = vehicles_[k];
    ProfileAnnouncement ann;
    ann.pev = k;
    ann.profile.resize(T);
    project_onto_pev_set(v.profile, msg.accumulator, step_, *v.spec, projection_, ann.profile, v.workspace);
    announcements.push_back(std::move(ann));
  }

  // Upstream: announcements reach the substation and every feeder on the path.
  for (auto& ann : announcements) {
    vehicles_[ann.pev].profile = ann.profile;
    for (std::size_t l : network_->path(ann.pev)) {
      auto& f = feeders_[l];
      const auto it = std::lower_bound(f.members.begin(), f.members.end(), ann.pev);
      f.member_profiles[static_cast<std::size_t>(it - f.members.begin())] = ann.profile;
    }
    substation_profiles_[ann.pev] = std::move(ann.profile);
    ++event.messages.upstream_announcements;
  }

  if (mode_ == CoordinationMode::primal_dual) {
    for (auto& f : feeders_) {
      f.mu.swap(f.pending_mu);
      for (double m : f.mu) event.max_multiplier = std::max(event.max_multiplier, m);
    }
  }

  ++rounds_;
  events_.push_back(event);
  if (log_) {
    *log_ << "{\"round\":" << event.round << ",\"downstream_messages\":" << event.messages.downstream_messages
          << ",\"downstream_hops\":" << event.messages.downstream_hops
          << ",\"upstream_announcements\":" << event.messages.upstream_announcements
          << ",\"max_accumulator\":" << format_double(event.max_accumulator)
          << ",\"max_multiplier\":" << format_double(event.max_multiplier) << "}\n";
  }
}

void Coordinator::run(std::size_t rounds) {
  for (std::size_t i = 0; i < rounds; ++i) run_round();
}

ProfileSet Coordinator::profiles() const {
  ProfileSet p(vehicles_.size(), network_->horizon());
  for (std::size_t k = 0; k < vehicles_.size(); ++k) {
    std::copy(vehicles_[k].profile.begin(), vehicles_[k].profile.end(), p.row(k).begin());
  }
  return p;
}

DualState Coordinator::multipliers() const {
  DualState dual(feeders_.size(), network_->horizon(), mu_max_);
  if (mode_ != CoordinationMode::primal_dual) return dual;
  for (const auto& f : feeders_) {
    for (std::size_t t = 0; t < f.mu.size(); ++t) dual(f.index, t) = f.mu[t];
  }
  return dual;
}

}  // namespace pevsched
