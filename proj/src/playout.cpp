#include "rxm/playout.hpp"

#include <algorithm>

#include "rxm/error.hpp"

namespace rxm {

void Playout::register_chart(std::shared_ptr<const ChartSpec> spec) {
  if (find_spec(spec->name)) {
    throw Error(ErrorKind::duplicate_registration, "chart '" + spec->name + "' already registered");
  }
  specs_.push_back(std::move(spec));
}

const ChartSpec* Playout::find_spec(std::string_view name) const {
  for (const auto& s : specs_) {
    if (s->name == name) return s.get();
  }
  return nullptr;
}

namespace {

bool is_violation(AdvanceResult r) {
  return r == AdvanceResult::cold_violation || r == AdvanceResult::hot_violation ||
         r == AdvanceResult::forbidden_violation;
}

}  // namespace

PendingObservation Playout::prepare(const EventInstance& event, const ChartContext& ctx) const {
  PendingObservation out;
  std::vector<const ActiveChart*> surviving;
  for (const auto& c : copies_) {
    Match m = c.match(event, ctx);
    if (!is_violation(m.result)) surviving.push_back(&c);
    out.matches.emplace_back(c.id(), std::move(m));
  }
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    for (auto& a : find_activations(*specs_[i], event, ctx, surviving)) {
      out.activations.emplace_back(i, std::move(a));
    }
  }
  return out;
}

PlayoutUpdate Playout::commit(const PendingObservation& pending, const EventInstance& event,
                              const ChartContext& ctx) {
  PlayoutUpdate update;
  auto record = [&](AdvanceResult r, std::int64_t id, std::optional<Violation>& v) {
    switch (r) {
      case AdvanceResult::progressed: update.advanced.push_back(id); break;
      case AdvanceResult::completed:
        update.advanced.push_back(id);
        update.completed.push_back(id);
        break;
      case AdvanceResult::irrelevant: break;
      case AdvanceResult::cold_violation:
      case AdvanceResult::hot_violation:
      case AdvanceResult::forbidden_violation:
        update.aborted.push_back(id);
        if (v && v->kind != ViolationKind::cold) {
          update.violations.push_back(*v);
          log_.push_back(std::move(*v));
        }
        break;
    }
  };

  for (const auto& [id, m] : pending.matches) {
    auto it = std::find_if(copies_.begin(), copies_.end(),
                           [id = id](const ActiveChart& c) { return c.id() == id; });
    if (it == copies_.end()) continue;
    std::optional<Violation> v;
    record(it->apply(m, event, ctx, &v), id, v);
  }
  for (const auto& [spec, activation] : pending.activations) {
    std::optional<Violation> v;
    ActiveChart copy = start_copy(specs_[spec], activation, next_id_++, event, ctx, &v);
    update.activated.push_back(copy.id());
    if (copy.running()) {
      copies_.push_back(std::move(copy));
    } else if (copy.state().status == CopyStatus::completed) {
      update.completed.push_back(copy.id());
    } else {
      record(AdvanceResult::hot_violation, copy.id(), v);
    }
  }
  std::erase_if(copies_, [](const ActiveChart& c) { return !c.running(); });
  return update;
}

std::vector<EventInstance> Playout::candidates(const ChartContext& ctx) const {
  std::vector<EventInstance> all;
  for (const auto& c : copies_) {
    for (auto& em : c.enabled_messages(ctx)) {
      if (!em.message->executed || !em.event) continue;
      bool seen = std::any_of(all.begin(), all.end(),
                              [&](const EventInstance& e) { return e.same_occurrence(*em.event); });
      if (!seen) all.push_back(std::move(*em.event));
    }
  }
  std::vector<EventInstance> out;
  for (auto& e : all) {
    if (!is_blocked(e, ctx)) out.push_back(std::move(e));
  }
  return out;
}

bool Playout::is_blocked(const EventInstance& event, const ChartContext& ctx) const {
  return std::any_of(copies_.begin(), copies_.end(),
                     [&](const ActiveChart& c) { return c.is_blocked(event, ctx); });
}

std::vector<Obligation> Playout::obligations() const {
  std::vector<Obligation> out;
  for (const auto& c : copies_) {
    for (const Element* e : c.obligations()) out.push_back({c.spec().name, c.id(), e});
  }
  return out;
}

void Playout::restore(std::vector<std::pair<std::string, CopyState>> copies, std::int64_t next_id,
                      std::vector<Violation> log) {
  std::vector<ActiveChart> restored;
  for (auto& [chart, state] : copies) {
    auto it = std::find_if(specs_.begin(), specs_.end(),
                           [&](const auto& s) { return s->name == chart; });
    if (it == specs_.end()) {
      throw Error(ErrorKind::invalid_argument, "snapshot names unknown chart '" + chart + "'");
    }
    restored.emplace_back(*it, std::move(state));
  }
  copies_ = std::move(restored);
  next_id_ = next_id;
  log_ = std::move(log);
}

}  // namespace rxm
