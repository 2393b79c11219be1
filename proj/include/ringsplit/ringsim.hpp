#pragma once

#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "ringsplit/splitting.hpp"

namespace ringsplit {

// ---------------------------------------------------------------------------
// Deterministic round-based simulation of the decentralised protocol on a
// ring of n agents. Agent 1 holds A_1 only; agent i >= 2 holds A_i and (when
// it exists) B_{i-1}, and owns the governing variable z_{i-1}. Every round k:
//
//   agent 1     computes x_1 and sends it to agents 2 and n (one message when
//               they coincide at n = 2);
//   agent 2..n-1 computes x_i and z_{i-1}, sends x_i downstream (plus the
//               reflection correction in Lipschitz/mixed runs) and the new
//               z_{i-1} upstream;
//   agent n     computes x_n and z_{n-1} and sends z_{n-1} upstream.
//
// The residual sweep accumulates the per-agent contributions
// gamma^2 |x_i - x_{i-1}|^2 in increasing agent order (agent 2 initiates) and
// agent n broadcasts the total - or a halt notice once it is below the
// threshold - around the full ring, the final hop closing the loop back at
// agent n. Messages travel only between ring neighbours through FIFO
// channels; agents are executed by a single-threaded event loop whose round
// order matches the protocol's dataflow chain.
// ---------------------------------------------------------------------------

struct XValue {
  Vector v;
};
struct ZValue {
  Vector v;
};
struct ReflectedTerm {
  Vector v;  // lambda (B_{i-1}(x_i) - B_{i-1}(x_{i-1}))
};
struct ResidualPartial {
  double value = 0.0;
};
struct Halt {};

using Payload = std::variant<XValue, ZValue, ReflectedTerm, ResidualPartial, Halt>;

const char* payload_tag(const Payload& p);
bool is_data_payload(const Payload& p);  // XValue / ZValue / ReflectedTerm
double payload_norm(const Payload& p);

struct Message {
  int from = 0;
  int to = 0;
  long round = 0;
  Payload payload;
};

struct LogRecord {
  long round = 0;
  int from = 0;
  int to = 0;
  const char* tag = "";
  double norm = 0.0;
};

struct AgentState {
  int id = 0;  // 1-based
  ResolventOp resolvent;
  std::optional<ForwardOp> forward;  // B_{id-1}; absent for agent 1 (and agent n in Lipschitz runs)
  std::optional<Vector> z_owned;     // z_{id-1}; absent for agent 1
  std::optional<Vector> z_copy;      // z_id received from agent id+1; absent for agent n
  Vector x;                          // x_id from the current round
  Vector x_prev_in;                  // x_{id-1} received this round
  Vector x_first_in;                 // x_1, agent n only
  std::optional<Vector> own_term;    // B_{id-1}(x_{id-1}) from the current round
  double known_residual = -1.0;      // last broadcast residual seen by this agent
  bool halted = false;
};

struct MessageCounts {
  unsigned long long x = 0;
  unsigned long long z = 0;
  unsigned long long reflected = 0;
  unsigned long long residual = 0;
  unsigned long long halt = 0;
  unsigned long long data() const { return x + z + reflected; }
  unsigned long long total() const { return data() + residual + halt; }
};

enum class RingStatus { Converged, MaxRounds };

struct RingRunReport {
  std::vector<Vector> z;  // final z_1..z_{n-1}
  std::vector<Vector> x;  // final x_1..x_n
  Trace trace;
  RingStatus status = RingStatus::MaxRounds;
  long rounds = 0;
  MessageCounts counts;
};

class RingNetwork {
 public:
  RingNetwork(const ProblemInstance& p, const StepParams& sp, const std::vector<Vector>& z0,
              bool enable_log = false);

  /// Executes one full iteration; afterwards the global state equals one
  /// application of the sequential operator, bit for bit.
  void step_round();

  /// Runs the residual sweep for the last completed round and returns the
  /// aggregated squared residual (no halt decision).
  double aggregate_residual();

  RingRunReport run_until_residual(const StopRule& stop);

  int n() const { return n_; }
  long rounds_completed() const { return rounds_; }
  std::size_t channel_count() const { return channels_.size(); }
  const AgentState& agent(int id) const;

  std::vector<Vector> z_snapshot() const;     // owned z_1..z_{n-1}
  std::vector<Vector> x_snapshot() const;     // x_1..x_n of the last round
  std::vector<Vector> dual_snapshot() const;  // B_i(x_i) of the last round

  const MessageCounts& counts() const { return counts_; }

  void enable_log(bool on) { log_enabled_ = on; }
  const std::vector<LogRecord>& log() const { return log_; }

  /// Fault injection for protocol tests: places a raw message on a channel.
  void inject_message(Message m, bool downstream = true);

 private:
  // Channels are keyed by (from, to, direction class). The direction class
  // distinguishes the successor-facing link from the predecessor-facing one,
  // which keeps the n = 2 degenerate ring as two parallel channel pairs
  // instead of multiplexing opposite-purpose traffic on one FIFO.
  static constexpr int kDown = 0;  // towards the successor (i -> i+1 mod n)
  static constexpr int kUp = 1;    // towards the predecessor (i -> i-1 mod n)
  using ChannelKey = std::tuple<int, int, int>;

  int succ(int id) const { return id % n_ + 1; }
  int pred(int id) const { return (id + n_ - 2) % n_ + 1; }

  void push(Message m, int dir);
  Message pop_expect(int from, int to, int dir, const char* expected_tag, long expected_round);
  void verify_round_channels(long round);
  std::pair<double, bool> residual_sweep(double halt_tol);  // halt_tol < 0 disables halting

  int n_ = 0;
  Mode mode_ = Mode::Cocoercive;
  Eigen::Index dim_ = 0;
  StepParams params_;
  long rounds_ = 0;
  std::vector<AgentState> agents_;
  std::map<ChannelKey, std::deque<Message>> channels_;
  MessageCounts counts_;
  bool log_enabled_ = false;
  std::vector<LogRecord> log_;
};

RingNetwork spawn_ring(const ProblemInstance& p, const StepParams& sp,
                       const std::vector<Vector>& z0, bool enable_log = false);

/// One JSON object per message: {round, from, to, payload_tag, norm}.
void write_message_log(std::ostream& os, const std::vector<LogRecord>& log);

}  // namespace ringsplit
