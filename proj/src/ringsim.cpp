#include "ringsplit/ringsim.hpp"

#include <chrono>
#include <string>

#include "json.hpp"

namespace ringsplit {

const char* payload_tag(const Payload& p) {
  return std::visit(
      [](const auto& v) -> const char* {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, XValue>) return "x_value";
        else if constexpr (std::is_same_v<T, ZValue>) return "z_value";
        else if constexpr (std::is_same_v<T, ReflectedTerm>) return "reflected_term";
        else if constexpr (std::is_same_v<T, ResidualPartial>) return "residual_partial";
        else return "halt";
      },
      p);
}

bool is_data_payload(const Payload& p) {
  return std::holds_alternative<XValue>(p) || std::holds_alternative<ZValue>(p) ||
         std::holds_alternative<ReflectedTerm>(p);
}

double payload_norm(const Payload& p) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ResidualPartial>) return v.value;
        else if constexpr (std::is_same_v<T, Halt>) return 0.0;
        else return v.v.norm();
      },
      p);
}

namespace {

std::string edge_name(int from, int to) {
  return std::to_string(from) + "->" + std::to_string(to);
}

}  // namespace

RingNetwork::RingNetwork(const ProblemInstance& p, const StepParams& sp,
                         const std::vector<Vector>& z0, bool enable_log) {
  log_enabled_ = enable_log;
  validate_instance(p);
  const ParamCheck chk = validate_params(p.n, p.mode, max_lipschitz(p), sp.lambda, sp.gamma);
  if (!chk.ok) throw Error(Errc::InvalidParams, chk.reason);
  if (z0.size() != static_cast<std::size_t>(p.n - 1))
    throw Error(Errc::DimensionMismatch, "initial governing variables must have n-1 blocks");
  for (const Vector& zi : z0) {
    require_dim(zi, p.dim, "initial governing variable");
    require_finite(zi, "initial governing variable");
  }

  n_ = p.n;
  mode_ = p.mode;
  dim_ = p.dim;
  params_ = sp;

  agents_.resize(static_cast<std::size_t>(n_));
  for (int id = 1; id <= n_; ++id) {
    AgentState& a = agents_[static_cast<std::size_t>(id - 1)];
    a.id = id;
    a.resolvent = p.resolvents[static_cast<std::size_t>(id - 1)];
    if (id >= 2 && static_cast<std::size_t>(id - 2) < p.forwards.size())
      a.forward = p.forwards[static_cast<std::size_t>(id - 2)];
    if (id >= 2) a.z_owned = z0[static_cast<std::size_t>(id - 2)];
  }

  // One directed channel towards the successor and one towards the predecessor
  // of every agent. At n = 2 the two neighbours coincide and the four channels
  // form the degenerate ring's two parallel pairs.
  for (int id = 1; id <= n_; ++id) {
    channels_[{id, succ(id), kDown}];
    channels_[{id, pred(id), kUp}];
  }

  // Every owner distributes its initial governing variable upstream; these
  // setup messages carry round -1 and are consumed by round 0.
  for (int id = 2; id <= n_; ++id)
    push({id, id - 1, -1, ZValue{*agents_[static_cast<std::size_t>(id - 1)].z_owned}}, kUp);
}

RingNetwork spawn_ring(const ProblemInstance& p, const StepParams& sp,
                       const std::vector<Vector>& z0, bool enable_log) {
  return RingNetwork(p, sp, z0, enable_log);
}

const AgentState& RingNetwork::agent(int id) const {
  if (id < 1 || id > n_) throw Error(Errc::Protocol, "agent id out of range");
  return agents_[static_cast<std::size_t>(id - 1)];
}

void RingNetwork::push(Message m, int dir) {
  auto it = channels_.find({m.from, m.to, dir});
  if (it == channels_.end())
    throw Error(Errc::Protocol, "no channel between non-adjacent agents " + edge_name(m.from, m.to));
  if (log_enabled_)
    log_.push_back({m.round, m.from, m.to, payload_tag(m.payload), payload_norm(m.payload)});
  if (std::holds_alternative<XValue>(m.payload)) ++counts_.x;
  else if (std::holds_alternative<ZValue>(m.payload)) ++counts_.z;
  else if (std::holds_alternative<ReflectedTerm>(m.payload)) ++counts_.reflected;
  else if (std::holds_alternative<ResidualPartial>(m.payload)) ++counts_.residual;
  else ++counts_.halt;
  it->second.push_back(std::move(m));
}

Message RingNetwork::pop_expect(int from, int to, int dir, const char* expected_tag,
                                long expected_round) {
  auto it = channels_.find({from, to, dir});
  if (it == channels_.end())
    throw Error(Errc::Protocol, "no channel between non-adjacent agents " + edge_name(from, to));
  if (it->second.empty())
    throw Error(Errc::Protocol, "missing " + std::string(expected_tag) + " on edge " +
                                    edge_name(from, to) + " at round " +
                                    std::to_string(expected_round));
  Message m = std::move(it->second.front());
  it->second.pop_front();
  if (std::string(payload_tag(m.payload)) != expected_tag || m.round != expected_round)
    throw Error(Errc::Protocol, "expected " + std::string(expected_tag) + " for round " +
                                    std::to_string(expected_round) + " on edge " +
                                    edge_name(from, to) + ", found " + payload_tag(m.payload) +
                                    " for round " + std::to_string(m.round));
  return m;
}

void RingNetwork::verify_round_channels(long round) {
  // After a round the only pending traffic is one fresh governing update per
  // upstream edge (i+1 -> i); anything else is a duplicate or stray message.
  for (auto& [key, queue] : channels_) {
    const auto [from, to, dir] = key;
    const bool z_edge = dir == kUp && from == to + 1;
    if (!z_edge) {
      if (!queue.empty())
        throw Error(Errc::Protocol, "stray message on edge " + edge_name(from, to) +
                                        " after round " + std::to_string(round));
      continue;
    }
    if (queue.size() != 1 || !std::holds_alternative<ZValue>(queue.front().payload) ||
        queue.front().round != round)
      throw Error(Errc::Protocol, "edge " + edge_name(from, to) +
                                      " must hold exactly the round-" + std::to_string(round) +
                                      " governing update after round " + std::to_string(round));
  }
}

void RingNetwork::step_round() {
  const long k = rounds_;
  const double lambda = params_.lambda;
  const double gamma = params_.gamma;

  // agent 1
  {
    AgentState& a = agents_[0];
    Message mz = pop_expect(2, 1, kUp, "z_value", k - 1);
    a.z_copy = std::move(std::get<ZValue>(mz.payload).v);
    a.x = resolve(a.resolvent, lambda, *a.z_copy);
    push({1, 2, k, XValue{a.x}}, kDown);
    // agents 2 and n coincide at n = 2; deliver exactly one copy
    if (n_ > 2) push({1, n_, k, XValue{a.x}}, kUp);
  }

  // agents 2..n-1
  for (int id = 2; id <= n_ - 1; ++id) {
    AgentState& a = agents_[static_cast<std::size_t>(id - 1)];
    Message mz = pop_expect(id + 1, id, kUp, "z_value", k - 1);
    a.z_copy = std::move(std::get<ZValue>(mz.payload).v);
    Message mx = pop_expect(id - 1, id, kDown, "x_value", k);
    a.x_prev_in = std::move(std::get<XValue>(mx.payload).v);

    Vector reflected_in;
    if (mode_ != Mode::Cocoercive && id >= 3) {
      Message mr = pop_expect(id - 1, id, kDown, "reflected_term", k);
      reflected_in = std::move(std::get<ReflectedTerm>(mr.payload).v);
    }

    const Vector own = forward_eval(*a.forward, a.x_prev_in);
    a.own_term = own;
    const Vector arg =
        (mode_ == Mode::Cocoercive || id == 2)
            ? step::chain_arg(*a.z_copy, *a.z_owned, a.x_prev_in, own, lambda)
            : step::chain_arg_reflected(*a.z_copy, *a.z_owned, a.x_prev_in, own, reflected_in,
                                        lambda);
    a.x = resolve(a.resolvent, lambda, arg);
    Vector z_new = step::z_step(*a.z_owned, a.x, a.x_prev_in, gamma);

    push({id, id + 1, k, XValue{a.x}}, kDown);
    if (mode_ != Mode::Cocoercive) {
      Vector reflected_out =
          a.forward->regularity == Regularity::LipschitzMonotone
              ? step::reflected_term(forward_eval(*a.forward, a.x), own, lambda)
              : Vector::Zero(dim_);
      push({id, id + 1, k, ReflectedTerm{std::move(reflected_out)}}, kDown);
    }
    push({id, id - 1, k, ZValue{z_new}}, kUp);
    a.z_owned = std::move(z_new);
  }

  // agent n
  {
    AgentState& a = agents_[static_cast<std::size_t>(n_ - 1)];
    if (n_ == 2) {
      Message mx = pop_expect(1, 2, kDown, "x_value", k);
      a.x_first_in = std::move(std::get<XValue>(mx.payload).v);
      a.x_prev_in = a.x_first_in;
    } else {
      Message mf = pop_expect(1, n_, kUp, "x_value", k);
      a.x_first_in = std::move(std::get<XValue>(mf.payload).v);
      Message mx = pop_expect(n_ - 1, n_, kDown, "x_value", k);
      a.x_prev_in = std::move(std::get<XValue>(mx.payload).v);
    }

    Vector arg;
    if (mode_ == Mode::Cocoercive) {
      const Vector own = forward_eval(*a.forward, a.x_prev_in);
      a.own_term = own;
      arg = step::last_arg(a.x_first_in, a.x_prev_in, *a.z_owned, own, lambda);
    } else if (mode_ == Mode::Lipschitz) {
      Message mr = pop_expect(n_ - 1, n_, kDown, "reflected_term", k);
      arg = step::last_arg_reflected_only(a.x_first_in, a.x_prev_in, *a.z_owned,
                                          std::get<ReflectedTerm>(mr.payload).v);
    } else {
      Message mr = pop_expect(n_ - 1, n_, kDown, "reflected_term", k);
      const Vector own = forward_eval(*a.forward, a.x_prev_in);
      a.own_term = own;
      arg = step::last_arg_reflected(a.x_first_in, a.x_prev_in, *a.z_owned, own,
                                     std::get<ReflectedTerm>(mr.payload).v, lambda);
    }
    a.x = resolve(a.resolvent, lambda, arg);
    Vector z_new = step::z_step(*a.z_owned, a.x, a.x_prev_in, gamma);
    push({n_, n_ - 1, k, ZValue{z_new}}, kUp);
    a.z_owned = std::move(z_new);
  }

  rounds_ = k + 1;
  verify_round_channels(k);
}

std::pair<double, bool> RingNetwork::residual_sweep(double halt_tol) {
  if (rounds_ < 1)
    throw Error(Errc::Protocol, "residual sweep requires a completed round");
  const long k = rounds_ - 1;
  const double gamma = params_.gamma;

  // Accumulate in increasing agent order: agent 2 initiates, each owner adds
  // gamma^2 |x_i - x_{i-1}|^2 for its governing variable.
  double total = 0.0;
  for (int id = 2; id <= n_; ++id) {
    const AgentState& a = agents_[static_cast<std::size_t>(id - 1)];
    const double partial = step::residual_partial(a.x, a.x_prev_in, gamma);
    double running;
    if (id == 2) {
      running = partial;
    } else {
      Message m = pop_expect(id - 1, id, kDown, "residual_partial", k);
      running = std::get<ResidualPartial>(m.payload).value + partial;
    }
    if (id < n_)
      push({id, id + 1, k, ResidualPartial{running}}, kDown);
    else
      total = running;
  }

  // Agent n decides and broadcasts around the full ring; the final hop closes
  // the loop back at agent n, confirming every agent has been reached.
  const bool halt = halt_tol >= 0.0 && total <= halt_tol;
  int from = n_;
  for (int hop = 0; hop < n_; ++hop) {
    const int to = succ(from);
    if (halt)
      push({from, to, k, Halt{}}, kDown);
    else
      push({from, to, k, ResidualPartial{total}}, kDown);
    pop_expect(from, to, kDown, halt ? "halt" : "residual_partial", k);
    AgentState& recv = agents_[static_cast<std::size_t>(to - 1)];
    if (halt)
      recv.halted = true;
    else
      recv.known_residual = total;
    from = to;
  }
  return {total, halt};
}

double RingNetwork::aggregate_residual() { return residual_sweep(-1.0).first; }

std::vector<Vector> RingNetwork::z_snapshot() const {
  std::vector<Vector> z;
  z.reserve(static_cast<std::size_t>(n_ - 1));
  for (int id = 2; id <= n_; ++id) z.push_back(*agents_[static_cast<std::size_t>(id - 1)].z_owned);
  return z;
}

std::vector<Vector> RingNetwork::x_snapshot() const {
  std::vector<Vector> x;
  x.reserve(static_cast<std::size_t>(n_));
  for (const AgentState& a : agents_) x.push_back(a.x);
  return x;
}

std::vector<Vector> RingNetwork::dual_snapshot() const {
  std::vector<Vector> duals;
  for (const AgentState& a : agents_)
    if (a.own_term) duals.push_back(*a.own_term);
  return duals;
}

RingRunReport RingNetwork::run_until_residual(const StopRule& stop) {
  if (stop.max_iters < 1) throw Error(Errc::InvalidParams, "max_rounds must be at least 1");
  if (stop.check_period < 1) throw Error(Errc::InvalidParams, "check_period must be at least 1");

  RingRunReport report;
  report.trace.has_duals = stop.record_duals;
  report.status = RingStatus::MaxRounds;
  const auto start = std::chrono::steady_clock::now();

  while (rounds_ < stop.max_iters) {
    step_round();
    const long k = rounds_;
    const bool record = (k % stop.check_period == 0) || (k == stop.max_iters);
    if (!record) continue;
    const auto [total, halted] = residual_sweep(stop.tol_residual_sq);
    TraceRow row;
    row.k = k;
    row.residual_sq = total;
    row.consensus_gap = consensus_gap(x_snapshot());
    if (stop.record_duals) row.dual_values = dual_snapshot();
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.trace.rows.push_back(std::move(row));
    if (halted) {
      report.status = RingStatus::Converged;
      break;
    }
  }

  report.z = z_snapshot();
  report.x = x_snapshot();
  report.rounds = rounds_;
  report.counts = counts_;
  return report;
}

void RingNetwork::inject_message(Message m, bool downstream) {
  push(std::move(m), downstream ? kDown : kUp);
}

void write_message_log(std::ostream& os, const std::vector<LogRecord>& log) {
  for (const LogRecord& rec : log) {
    nlohmann::ordered_json j;
    j["round"] = rec.round;
    j["from"] = rec.from;
    j["to"] = rec.to;
    j["payload_tag"] = rec.tag;
    j["norm"] = rec.norm;
    os << j.dump() << '\n';
  }
}

}  // namespace ringsplit
