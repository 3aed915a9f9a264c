#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "grid_model.hpp"
#include "penalty_method.hpp"
#include "primal_dual.hpp"
#include "projection.hpp"

namespace pevsched {

enum class CoordinationMode { penalty, primal_dual };

/// Substation-seeded feedback on its way to one vehicle.
struct FeedbackMessage {
  std::size_t pev = 0;
  std::vector<double> accumulator;
  std::size_t hops = 0;
};

struct ProfileAnnouncement {
  std::size_t pev = 0;
  std::vector<double> profile;
};

/// Traffic of one round: K deliveries, each crossing |Pi_k| feeders, and K
/// announcements back to the substation.
struct MessageCount {
  std::size_t downstream_messages = 0;
  std::size_t downstream_hops = 0;
  std::size_t upstream_announcements = 0;
};

MessageCount message_count(const Network& network);

struct RoundEvent {
  std::size_t round = 0;
  MessageCount messages;
  double max_accumulator = 0.0;
  double max_multiplier = 0.0;
};

/// Round-based simulation of the feedback protocol. Each agent keeps only
/// what it would know in a deployment:
///   substation  base load D(t) and the latest announced profiles,
///   feeder l    its headroom, its cost or multiplier row, and the latest
///               profiles announced by the vehicles in Gamma_l,
///   vehicle k   its own constraints and current profile.
/// Rounds are synchronous and lossless; message order is fixed so results
/// match the centralized optimizers bit for bit. The network and fleet must
/// outlive the coordinator.
class Coordinator {
 public:
  static Coordinator penalty(const Network& network, std::span<const PevSpec> fleet, OverloadCost cost, double step,
                             ProjectionOptions projection = {});
  static Coordinator primal_dual(const Network& network, std::span<const PevSpec> fleet, double step, double mu_max,
                                 ProjectionOptions projection = {}, double initial_multiplier = 0.0);

  /// Replaces every profile (substation, feeder and vehicle views alike).
  void reset_profiles(const ProfileSet& profiles);

  void run_round();
  void run(std::size_t rounds);

  CoordinationMode mode() const { return mode_; }
  std::size_t rounds() const { return rounds_; }
  /// Profiles as held by the vehicles.
  ProfileSet profiles() const;
  /// Multipliers as held by the feeders (primal-dual mode).
  DualState multipliers() const;
  /// Running average of the profiles seen by the substation (primal-dual mode).
  const ProfileSet& averaged() const { return average_.value(); }
  const std::vector<RoundEvent>& events() const { return events_; }

  /// The per-slot term feeder l would add to a passing feedback message now.
  std::vector<double> feeder_term(std::size_t l) const;

  /// Optional JSON-lines event log, one object per round.
  void set_event_log(std::ostream* log) { log_ = log; }

 private:
  struct FeederAgent {
    std::size_t index = 0;
    std::vector<std::size_t> members;
    std::vector<double> headroom;
    std::vector<std::vector<double>> member_profiles;
    PowerPenalty cost;
    std::vector<double> mu;
    std::vector<double> pending_mu;

    std::vector<double> load() const;
  };

  struct VehicleAgent {
    const PevSpec* spec = nullptr;
    std::vector<double> profile;
    ProjectionWorkspace workspace;
  };

  Coordinator(const Network& network, std::span<const PevSpec> fleet, CoordinationMode mode, double step,
              ProjectionOptions projection);

  std::vector<double> feedback_terms(const FeederAgent& feeder, const std::vector<double>& load) const;

  const Network* network_;
  CoordinationMode mode_;
  double step_;
  double mu_max_ = 0.0;
  ProjectionOptions projection_;
  std::vector<std::vector<double>> substation_profiles_;
  std::vector<FeederAgent> feeders_;
  std::vector<VehicleAgent> vehicles_;
  RunningAverage average_;
  std::size_t rounds_ = 0;
  std::vector<RoundEvent> events_;
  std::ostream* log_ = nullptr;
};

}  // namespace pevsched
