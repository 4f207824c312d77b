#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rxm/event.hpp"
#include "rxm/lsc.hpp"

namespace rxm {

struct PlayoutUpdate {
  std::vector<std::int64_t> activated;
  std::vector<std::int64_t> advanced;
  std::vector<std::int64_t> completed;
  std::vector<std::int64_t> aborted;
  std::vector<Violation> violations;  // hot and forbidden only
};

struct Obligation {
  std::string chart;
  std::int64_t copy = 0;
  const Element* message = nullptr;
};

/// Matches computed before an event's effects reach the store.
struct PendingObservation {
  std::vector<std::pair<std::int64_t, Match>> matches;  // by copy id
  std::vector<std::pair<std::size_t, Activation>> activations;  // by spec index
};

/// Every registered chart and all of its running copies.
class Playout {
 public:
  void register_chart(std::shared_ptr<const ChartSpec> spec);
  const std::vector<std::shared_ptr<const ChartSpec>>& specs() const { return specs_; }
  const ChartSpec* find_spec(std::string_view name) const;

  /// Running copies in activation order.
  const std::vector<ActiveChart>& copies() const { return copies_; }

  PendingObservation prepare(const EventInstance& event, const ChartContext& ctx) const;
  PlayoutUpdate commit(const PendingObservation& pending, const EventInstance& event,
                       const ChartContext& ctx);
  PlayoutUpdate observe(const EventInstance& event, const ChartContext& ctx) {
    return commit(prepare(event, ctx), event, ctx);
  }

  /// Fully bound executed enabled messages, ordered by copy then location,
  /// duplicates collapsed, blocked ones removed.
  std::vector<EventInstance> candidates(const ChartContext& ctx) const;
  bool is_blocked(const EventInstance& event, const ChartContext& ctx) const;
  std::vector<Obligation> obligations() const;

  const std::vector<Violation>& log() const { return log_; }
  std::int64_t next_copy_id() const { return next_id_; }

  /// Replaces all copies; charts are looked up by name.
  void restore(std::vector<std::pair<std::string, CopyState>> copies, std::int64_t next_id,
               std::vector<Violation> log);

 private:
  std::vector<std::shared_ptr<const ChartSpec>> specs_;
  std::vector<ActiveChart> copies_;
  std::vector<Violation> log_;
  std::int64_t next_id_ = 1;
};

}  // namespace rxm
