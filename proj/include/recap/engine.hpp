#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <vector>

namespace recap {

/// Deterministic single-threaded discrete-event engine driving the
/// shared virtual clock. Events at equal timestamps fire in scheduling
/// order. Periodic tasks reschedule themselves until cancelled.
class SimEngine {
 public:
  using Task = std::function<void()>;

  /// Handle used to cancel a periodic task.
  struct PeriodicHandle {
    std::shared_ptr<bool> active;
    void cancel() { if (active) *active = false; }
  };

  double now() const { return now_; }

  void schedule_at(double t, Task fn) {
    if (t < now_) t = now_;
    queue_.push(Event{t, seq_++, std::move(fn)});
  }

  void schedule_in(double dt, Task fn) { schedule_at(now_ + dt, std::move(fn)); }

  /// Register `fn` to run every `interval` virtual seconds, first firing
  /// one interval from now.
  PeriodicHandle every(double interval, Task fn) {
    auto active = std::make_shared<bool>(true);
    reschedule(interval, fn, active);
    return PeriodicHandle{active};
  }

  bool empty() const { return queue_.empty(); }

  /// Process the next event; returns false if the queue is empty.
  bool step() {
    if (queue_.empty()) return false;
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.t;
    ev.fn();
    return true;
  }

  /// Run events with timestamp <= t, then advance the clock to t.
  void run_until(double t) {
    while (!queue_.empty() && queue_.top().t <= t) step();
    if (t > now_) now_ = t;
  }

  /// Run while pred() holds and events remain.
  void run_while(const std::function<bool()>& pred) {
    while (pred() && step()) {}
  }

  void run_all() {
    while (step()) {}
  }

  /// Advance the clock without processing events scheduled in between.
  /// Only for isolated unit tests of timestamping.
  void advance_clock(double dt) { now_ += dt; }

 private:
  struct Event {
    double t;
    std::uint64_t seq;
    Task fn;
    bool operator>(const Event& o) const {
      return t != o.t ? t > o.t : seq > o.seq;
    }
  };

  void reschedule(double interval, Task fn, std::shared_ptr<bool> active) {
    schedule_in(interval, [this, interval, fn, active]() {
      if (!*active) return;
      fn();
      if (*active) reschedule(interval, fn, active);
    });
  }

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
};

}  // namespace recap
