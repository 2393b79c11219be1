#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include "helpers.hpp"
#include "ringsplit/problems.hpp"
#include "ringsplit/ringsim.hpp"
#include "ringsplit/rng.hpp"

using namespace ringsplit;
using namespace testutil;

namespace {

// per-round message counts grouped from the log
struct RoundCounts {
  int x = 0, z = 0, reflected = 0, residual = 0, halt = 0;
};

std::map<long, RoundCounts> group_by_round(const std::vector<LogRecord>& log) {
  std::map<long, RoundCounts> out;
  for (const LogRecord& rec : log) {
    RoundCounts& c = out[rec.round];
    const std::string tag = rec.tag;
    if (tag == "x_value") ++c.x;
    else if (tag == "z_value") ++c.z;
    else if (tag == "reflected_term") ++c.reflected;
    else if (tag == "residual_partial") ++c.residual;
    else ++c.halt;
  }
  return out;
}

}  // namespace

TEST_CASE("spawned ring structure and ownership") {
  const ProblemSpec spec = make_quadratic_consensus(3, 2, 3);
  const StepParams sp = default_params(spec.instance);
  RingNetwork net = spawn_ring(spec.instance, sp, zero_governing(spec.instance));

  CHECK(net.n() == 3);
  CHECK(net.channel_count() == 6);
  CHECK_FALSE(net.agent(1).forward.has_value());  // agent 1 holds A_1 only
  CHECK_FALSE(net.agent(1).z_owned.has_value());
  CHECK(net.agent(2).forward.has_value());
  CHECK(net.agent(2).z_owned.has_value());
  CHECK(net.agent(3).forward.has_value());

  // degenerate two-agent ring keeps two parallel channel pairs
  const ProblemSpec two = make_quadratic_consensus(2, 2, 4);
  RingNetwork net2 =
      spawn_ring(two.instance, default_params(two.instance), zero_governing(two.instance));
  CHECK(net2.channel_count() == 4);

  // in Lipschitz runs the last agent has no forward operator
  const ProblemSpec rot = make_rotation_counterexample();
  RingNetwork net3 =
      spawn_ring(rot.instance, default_params(rot.instance), zero_governing(rot.instance));
  CHECK(net3.agent(2).forward.has_value());
  CHECK_FALSE(net3.agent(3).forward.has_value());
}

TEST_CASE("one round reproduces one sequential application bit for bit") {
  struct Case {
    Mode mode;
    int n;
  };
  for (const Case c : {Case{Mode::Cocoercive, 2}, Case{Mode::Cocoercive, 4},
                       Case{Mode::Lipschitz, 3}, Case{Mode::Lipschitz, 5},
                       Case{Mode::Mixed, 3}, Case{Mode::Mixed, 4}}) {
    const ProblemInstance p = random_instance(c.mode, c.n, 3, 100 + c.n);
    const StepParams sp = default_params(p);
    Rng rng(200 + c.n);
    const std::vector<Vector> z0 = random_governing(p, rng, 2.0);

    RingNetwork net = spawn_ring(p, sp, z0);
    net.step_round();
    const ApplyResult seq = apply_step(p, sp, z0);
    CHECK(bits_equal(net.z_snapshot(), seq.z_next));
    CHECK(bits_equal(net.x_snapshot(), seq.x));
  }
}

TEST_CASE("all-zero two-agent ring: a round leaves the governing variable unchanged") {
  ProblemInstance p;
  p.n = 2;
  p.dim = 2;
  p.mode = Mode::Cocoercive;
  p.resolvents = {zero_resolvent(2), zero_resolvent(2)};
  p.forwards = {zero_map(2)};
  const StepParams sp = make_params(p, 1.0, 0.9);
  Rng rng(9);
  const std::vector<Vector> z0 = {rng.vector(2, -3.0, 3.0)};
  RingNetwork net = spawn_ring(p, sp, z0);
  net.step_round();
  CHECK(bits_equal(net.z_snapshot(), z0));
}

TEST_CASE("ring and sequential iterates coincide bit for bit over many rounds") {
  struct Case {
    Mode mode;
    int n;
  };
  for (const Case c : {Case{Mode::Cocoercive, 3}, Case{Mode::Lipschitz, 4}, Case{Mode::Mixed, 5}}) {
    const ProblemInstance p = random_instance(c.mode, c.n, 2, 300 + c.n);
    const StepParams sp = default_params(p);
    Rng rng(400 + c.n);
    const std::vector<Vector> z0 = random_governing(p, rng, 2.0);

    RingNetwork net = spawn_ring(p, sp, z0);
    SplitState st = initial_state(p, z0);
    for (int k = 0; k < 200; ++k) {
      net.step_round();
      advance(p, sp, st);
      REQUIRE(bits_equal(net.z_snapshot(), st.z));
      REQUIRE(bits_equal(net.x_snapshot(), st.x));
    }
  }
}

TEST_CASE("data-message schedule per round") {
  // cocoercive n=5: x downstream including 1->n, z upstream: 2(n-1)+1 = 9
  {
    const ProblemSpec spec = make_quadratic_consensus(5, 2, 5);
    const StepParams sp = default_params(spec.instance);
    RingNetwork net = spawn_ring(spec.instance, sp, zero_governing(spec.instance), true);
    for (int r = 0; r < 3; ++r) net.step_round();
    const auto per_round = group_by_round(net.log());
    for (long k = 0; k < 3; ++k) {
      const RoundCounts& c = per_round.at(k);
      CHECK(c.x == 5);
      CHECK(c.z == 4);
      CHECK(c.reflected == 0);
      CHECK(c.x + c.z == 9);
    }
    // setup distribution: one z message per owner at round -1
    CHECK(per_round.at(-1).z == 4);
  }

  // Lipschitz n=5 adds one reflected term per agent 2..n-1
  {
    const ProblemInstance p = random_lipschitz_instance(5, 2, 6);
    const StepParams sp = default_params(p);
    Rng rng(7);
    RingNetwork net = spawn_ring(p, sp, random_governing(p, rng, 1.0));
    net.enable_log(true);
    for (int r = 0; r < 3; ++r) net.step_round();
    const auto per_round = group_by_round(net.log());
    for (long k = 0; k < 3; ++k) {
      const RoundCounts& c = per_round.at(k);
      CHECK(c.x == 5);
      CHECK(c.z == 4);
      CHECK(c.reflected == 3);
    }
  }

  // n=2 degenerate ring: the doubled send collapses to one x message
  {
    const ProblemSpec spec = make_quadratic_consensus(2, 2, 8);
    const StepParams sp = default_params(spec.instance);
    RingNetwork net = spawn_ring(spec.instance, sp, zero_governing(spec.instance));
    net.enable_log(true);
    net.step_round();
    const auto per_round = group_by_round(net.log());
    CHECK(per_round.at(0).x == 1);
    CHECK(per_round.at(0).z == 1);
  }
}

TEST_CASE("reflected terms travel only on the tail edges of the chain") {
  const ProblemInstance p = random_lipschitz_instance(4, 2, 11);
  const StepParams sp = default_params(p);
  Rng rng(12);
  RingNetwork net = spawn_ring(p, sp, random_governing(p, rng, 1.0));
  net.enable_log(true);
  net.step_round();
  std::vector<std::pair<int, int>> edges;
  for (const LogRecord& rec : net.log())
    if (std::string(rec.tag) == "reflected_term") edges.push_back({rec.from, rec.to});
  REQUIRE(edges.size() == 2);
  CHECK(edges[0] == std::pair<int, int>{2, 3});
  CHECK(edges[1] == std::pair<int, int>{3, 4});
}

TEST_CASE("message locality: data messages only between ring neighbours") {
  const ProblemInstance p = random_mixed_instance(5, 2, 13);
  const StepParams sp = default_params(p);
  Rng rng(14);
  RingNetwork net = spawn_ring(p, sp, random_governing(p, rng, 1.0));
  net.enable_log(true);
  for (int r = 0; r < 5; ++r) net.step_round();
  (void)net.aggregate_residual();
  for (const LogRecord& rec : net.log()) {
    const int d = std::abs(rec.from - rec.to) % net.n();
    CHECK((d == 1 || d == net.n() - 1));
  }
}

TEST_CASE("aggregated residual equals the sequential residual") {
  const ProblemInstance p = random_cocoercive_instance(5, 3, 15);
  const StepParams sp = default_params(p);
  Rng rng(16);
  const std::vector<Vector> z0 = random_governing(p, rng, 2.0);

  RingNetwork net = spawn_ring(p, sp, z0);
  SplitState st = initial_state(p, z0);
  net.enable_log(true);
  for (int r = 0; r < 5; ++r) {
    net.step_round();
    advance(p, sp, st);
    const std::size_t log_before = net.log().size();
    const double ring_res = net.aggregate_residual();
    CHECK(std::abs(ring_res - st.last_residual_sq) <=
          1e-15 * std::max(1.0, st.last_residual_sq));
    // sweep cost is exactly 2(n-1) messages
    CHECK(net.log().size() - log_before == 2 * (net.n() - 1));
  }

  // accumulation order is fixed: 2 -> 3 -> ... -> n, then the broadcast loop
  std::vector<LogRecord> sweep(net.log().end() - 8, net.log().end());
  CHECK(sweep[0].from == 2);
  CHECK(sweep[0].to == 3);
  CHECK(sweep[1].from == 3);
  CHECK(sweep[1].to == 4);
  CHECK(sweep[2].from == 4);
  CHECK(sweep[2].to == 5);
  CHECK(sweep[3].from == 5);
  CHECK(sweep[3].to == 1);  // broadcast starts at agent n
  CHECK(sweep[7].from == 4);
  CHECK(sweep[7].to == 5);  // and closes the loop back at agent n

  // the n=2 sweep is the two broadcast hops only
  const ProblemSpec two = make_quadratic_consensus(2, 2, 17);
  RingNetwork net2 =
      spawn_ring(two.instance, default_params(two.instance), zero_governing(two.instance));
  net2.enable_log(true);
  net2.step_round();
  const std::size_t before = net2.log().size();
  (void)net2.aggregate_residual();
  CHECK(net2.log().size() - before == 2);

  // at a fixed point the aggregate is exactly zero
  ProblemInstance zeros;
  zeros.n = 2;
  zeros.dim = 2;
  zeros.mode = Mode::Cocoercive;
  zeros.resolvents = {zero_resolvent(2), zero_resolvent(2)};
  zeros.forwards = {zero_map(2)};
  RingNetwork net3 = spawn_ring(zeros, make_params(zeros, 1.0, 0.9),
                                {Vector::Constant(2, 0.7)});
  net3.step_round();
  CHECK(net3.aggregate_residual() == 0.0);
}

TEST_CASE("full runs match the sequential driver, trace rows included") {
  const ProblemSpec spec = make_quadratic_consensus(4, 3, 18);
  const StepParams sp = default_params(spec.instance);
  const StopRule stop{1e-18, 20000, 1, true};

  const SolveResult seq = iterate(spec.instance, sp, zero_governing(spec.instance), stop);
  RingNetwork net = spawn_ring(spec.instance, sp, zero_governing(spec.instance));
  const RingRunReport ring = net.run_until_residual(stop);

  CHECK(ring.status == RingStatus::Converged);
  CHECK(ring.rounds == seq.iterations);
  CHECK(bits_equal(ring.z, seq.z));
  CHECK(bits_equal(ring.x, seq.x));
  REQUIRE(ring.trace.rows.size() == seq.trace.rows.size());
  for (std::size_t i = 0; i < ring.trace.rows.size(); ++i) {
    CHECK(ring.trace.rows[i].k == seq.trace.rows[i].k);
    CHECK(ring.trace.rows[i].residual_sq == seq.trace.rows[i].residual_sq);
    CHECK(ring.trace.rows[i].consensus_gap == seq.trace.rows[i].consensus_gap);
    REQUIRE(ring.trace.rows[i].dual_values.size() == seq.trace.rows[i].dual_values.size());
    for (std::size_t j = 0; j < ring.trace.rows[i].dual_values.size(); ++j)
      CHECK(bits_equal(ring.trace.rows[i].dual_values[j], seq.trace.rows[i].dual_values[j]));
  }

  // check_period > 1 follows the same schedule on both drivers
  const StopRule sparse{1e-18, 20000, 7, false};
  const SolveResult seq2 = iterate(spec.instance, sp, zero_governing(spec.instance), sparse);
  RingNetwork net2 = spawn_ring(spec.instance, sp, zero_governing(spec.instance));
  const RingRunReport ring2 = net2.run_until_residual(sparse);
  REQUIRE(ring2.trace.rows.size() == seq2.trace.rows.size());
  for (std::size_t i = 0; i < ring2.trace.rows.size(); ++i) {
    CHECK(ring2.trace.rows[i].k == seq2.trace.rows[i].k);
    CHECK(ring2.trace.rows[i].residual_sq == seq2.trace.rows[i].residual_sq);
  }
  CHECK(ring2.rounds == seq2.iterations);
}

TEST_CASE("round cap reported as MaxRounds") {
  const ProblemSpec spec = make_quadratic_consensus(3, 2, 19);
  RingNetwork net =
      spawn_ring(spec.instance, default_params(spec.instance), zero_governing(spec.instance));
  const RingRunReport report = net.run_until_residual({1e-30, 10, 1, false});
  CHECK(report.status == RingStatus::MaxRounds);
  CHECK(report.rounds == 10);
}

TEST_CASE("halt propagates to every agent within one ring traversal") {
  const ProblemSpec spec = make_quadratic_consensus(4, 2, 20);
  const StepParams sp = default_params(spec.instance);
  RingNetwork net = spawn_ring(spec.instance, sp, zero_governing(spec.instance));
  net.enable_log(true);
  const RingRunReport report = net.run_until_residual({1e-18, 20000, 1, false});
  CHECK(report.status == RingStatus::Converged);
  for (int id = 1; id <= net.n(); ++id) CHECK(net.agent(id).halted);

  // the log ends with the n-hop halt loop n -> 1 -> ... -> n
  const auto& log = net.log();
  REQUIRE(log.size() >= 4);
  std::vector<LogRecord> tail(log.end() - 4, log.end());
  for (const LogRecord& rec : tail) CHECK(std::string(rec.tag) == "halt");
  CHECK(tail[0].from == 4);
  CHECK(tail[0].to == 1);
  CHECK(tail[3].from == 3);
  CHECK(tail[3].to == 4);
}

TEST_CASE("identical runs produce identical message logs") {
  const ProblemInstance p = random_mixed_instance(4, 2, 21);
  const StepParams sp = default_params(p);
  Rng rng(22);
  const std::vector<Vector> z0 = random_governing(p, rng, 1.0);

  const auto run = [&] {
    RingNetwork net = spawn_ring(p, sp, z0);
    net.enable_log(true);
    (void)net.run_until_residual({1e-16, 500, 1, false});
    return net.log();
  };
  const std::vector<LogRecord> a = run();
  const std::vector<LogRecord> b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].round == b[i].round);
    CHECK(a[i].from == b[i].from);
    CHECK(a[i].to == b[i].to);
    CHECK(std::string(a[i].tag) == b[i].tag);
    CHECK(a[i].norm == b[i].norm);
  }
}

TEST_CASE("ring rounds perform the same operator-evaluation counts as sequential steps") {
  const ProblemInstance p = random_lipschitz_instance(5, 2, 23);
  const StepParams sp = default_params(p);
  Rng rng(24);
  RingNetwork net = spawn_ring(p, sp, random_governing(p, rng, 1.0));
  reset_eval_counters();
  net.step_round();
  CHECK(eval_counters().resolve_calls == 5);
  CHECK(eval_counters().forward_evals == 6);
  reset_eval_counters();
}

TEST_CASE("protocol violations raise structured errors naming edge and round") {
  const ProblemSpec spec = make_quadratic_consensus(3, 2, 25);
  const StepParams sp = default_params(spec.instance);
  RingNetwork net = spawn_ring(spec.instance, sp, zero_governing(spec.instance));

  // residual sweep before any completed round
  CHECK_THROWS_AS(net.aggregate_residual(), Error);

  // a duplicate x message makes the post-round channel check fail
  net.step_round();
  net.inject_message({1, 2, 1, XValue{Vector::Zero(2)}}, true);
  try {
    net.step_round();
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Protocol);
    CHECK(std::string(e.what()).find("1->2") != std::string::npos);
  }

  // messages between non-adjacent agents are rejected outright
  const ProblemSpec big = make_quadratic_consensus(5, 2, 26);
  RingNetwork net2 =
      spawn_ring(big.instance, default_params(big.instance), zero_governing(big.instance));
  CHECK_THROWS_AS(net2.inject_message({1, 3, 0, XValue{Vector::Zero(2)}}, true), Error);
}
