#pragma once

#include <vector>

#include "dchmac/mac.hpp"
#include "dchmac/random.hpp"
#include "dchmac/simulator.hpp"

namespace dchmac::detail {

MetricsReport run_clustered(const ValidatedConfig& cfg, Protocol protocol, int horizon,
                            const RunOptions& opts);
MetricsReport run_flat(const ValidatedConfig& cfg, int horizon, const RunOptions& opts);

// Slotted CSMA/CA over a set of stations sharing one channel. The caller
// supplies positions and decides what a station sends and to whom.
class Csma {
 public:
  struct Station {
    BackoffState bo;
    int retries = 0;
    int tx_left = 0;
    bool failed = false;
    int rx = -1;
    Vec2 pos;
  };

  Csma(BackoffParams params, double sense_range, double interference_range, int tx_time,
       int retry_limit)
      : params_(params),
        sense_(sense_range),
        interf_(interference_range),
        tx_time_(tx_time),
        retry_limit_(retry_limit) {}

  std::vector<Station> st;

  void resize(std::size_t n) { st.resize(n); }

  // Hooks:
  //   ready(i)        station i is on the channel and has something to send
  //   available(i)    station i's radio may use the channel this slot
  //   begin(i)        returns the receiver index or -1 if nothing was sent
  //   rx_busy(r)      receiver radio is occupied elsewhere this slot
  //   done(i, ok)     one attempt finished
  //   drop(i)         retry limit exceeded
  template <class Ready, class Avail, class Begin, class RxBusy, class Done, class Drop>
  void step(RandomStream& rng, Ready ready, Avail available, Begin begin, RxBusy rx_busy,
            Done done, Drop drop) {
    active_.clear();
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (st[i].tx_left > 0) active_.push_back(static_cast<int>(i));
    }
    std::size_t ongoing = active_.size();

    for (std::size_t i = 0; i < st.size(); ++i) {
      Station& s = st[i];
      int idx = static_cast<int>(i);
      if (s.tx_left > 0) continue;
      if (!ready(idx)) {
        s.bo = BackoffState{};
        s.retries = 0;
        continue;
      }
      if (!available(idx)) continue;
      if (s.bo.post_success) s.bo = backoff_step(s.bo, BackoffEvent::PacketReady, params_, rng);
      if (s.bo.counter == 0) {
        int r = begin(idx);
        if (r < 0) {
          s.bo = BackoffState{};
          s.retries = 0;
          continue;
        }
        s.rx = r;
        s.tx_left = tx_time_;
        s.failed = false;
        active_.push_back(idx);
        continue;
      }
      bool busy = false;
      for (std::size_t a = 0; a < ongoing && !busy; ++a) {
        busy = distance(st[active_[a]].pos, s.pos) <= sense_;
      }
      s.bo = backoff_step(s.bo, busy ? BackoffEvent::Busy : BackoffEvent::Idle, params_, rng);
    }

    for (int t : active_) {
      Station& s = st[t];
      bool hit = rx_busy(s.rx) || st[s.rx].tx_left > 0;
      for (int u : active_) {
        if (hit) break;
        if (u != t && distance(st[u].pos, st[s.rx].pos) <= interf_) hit = true;
      }
      if (hit) s.failed = true;
    }

    for (int t : active_) {
      Station& s = st[t];
      if (--s.tx_left > 0) continue;
      done(t, !s.failed);
      if (!s.failed) {
        s.retries = 0;
        s.bo = backoff_step(s.bo, BackoffEvent::TxSuccess, params_, rng);
      } else if (++s.retries > retry_limit_) {
        drop(t);
        s.retries = 0;
        s.bo = BackoffState{};
      } else {
        s.bo = backoff_step(s.bo, BackoffEvent::TxCollision, params_, rng);
      }
    }
  }

 private:
  BackoffParams params_;
  double sense_;
  double interf_;
  int tx_time_;
  int retry_limit_;
  std::vector<int> active_;
};

}  // namespace dchmac::detail
