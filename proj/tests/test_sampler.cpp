#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>

#include "pbart/error.hpp"
#include "pbart/sampler/chain.hpp"
#include "pbart/sampler/conjugate.hpp"
#include "pbart/sampler/prior.hpp"
#include "pbart/sampler/proposal.hpp"
#include "pbart/sampler/shard_engine.hpp"
#include "support.hpp"

using namespace pbart;
using pbart::testing::random_tree;
using pbart::testing::toy_data;
using pbart::testing::uniform_grid;

namespace {

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
}

// Composite Simpson over [lo, hi].
template <class F>
double simpson(F f, double lo, double hi, int intervals = 20000) {
  const double h = (hi - lo) / intervals;
  double s = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

PriorParams default_prior() {
  PriorParams p;
  p.tau = 0.5 / (2.0 * std::sqrt(200.0));
  p.lambda = 0.1;
  return p;
}

// Recomputes what the engine should hold from scratch.
std::vector<double> full_fit(const ShardEngine& e) {
  std::vector<double> fit(e.rows(), 0.0);
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (const auto& t : e.forest()) fit[i] += t.evaluate(e.data().x.row(i), e.grid());
  }
  return fit;
}

// Runs a short chain on the engine, leaving it mid-run.
void warm_up(ShardEngine& engine, std::uint32_t m, int iterations, std::uint64_t seed) {
  SamplerSettings s;
  s.prior.m = m;
  s.prior.min_leaf = 2;
  Chain chain(s, engine, seed);
  for (int i = 0; i < iterations; ++i) chain.step();
}

}  // namespace

TEST(SplitPrior, Examples) {
  EXPECT_DOUBLE_EQ(split_prior_prob(0, 0.95, 2.0), 0.95);
  EXPECT_DOUBLE_EQ(split_prior_prob(1, 0.95, 2.0), 0.2375);
  EXPECT_DOUBLE_EQ(split_prior_prob(3, 0.95, 2.0), 0.059375);
}

TEST(Calibration, TauAndLambda) {
  PriorSettings s;
  s.m = 200;
  s.kfac = 2.0;
  const PriorParams p = calibrate_prior(s, 0.2);
  EXPECT_DOUBLE_EQ(p.tau, 0.5 / (2.0 * std::sqrt(200.0)));
  // P(sigma < sd) = q under sigma^2 = nu lambda / chi2_nu. Check by simulation.
  Rng rng(4);
  int below = 0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) below += std::sqrt(p.nu * p.lambda / rng.chi_square(p.nu)) < 0.2;
  EXPECT_NEAR(static_cast<double>(below) / draws, 0.9, 0.003);
}

TEST(Calibration, DomainErrorsNameTheKey) {
  PriorSettings s;
  s.kfac = 0.0;
  try {
    calibrate_prior(s, 1.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "kfac");
  }
}

TEST(MarginalLikelihood, EmptyNodeIsZero) {
  EXPECT_EQ(log_marginal_likelihood(SuffStats{}, 0.7, 0.3), 0.0);
}

TEST(MarginalLikelihood, MatchesQuadrature) {
  const double integral = simpson([](double mu) { return normal_pdf(1.0, mu, 1.0) * normal_pdf(mu, 0.0, 1.0); }, -15, 15);
  const double oracle = std::log(integral / normal_pdf(1.0, 0.0, 1.0));
  const double value = log_marginal_likelihood(SuffStats{1, 1.0, 1.0}, 1.0, 1.0);
  EXPECT_NEAR(value, oracle, 1e-9);
  EXPECT_NEAR(value, -0.0965736, 1e-7);
}

TEST(MarginalLikelihood, MultiRowMatchesQuadrature) {
  // Three residuals; the mu=0 baseline divides out the product of densities.
  const std::vector<double> r{0.3, -0.1, 0.5};
  const double sigma = 0.8, tau = 0.4;
  const double integral = simpson(
      [&](double mu) {
        double p = normal_pdf(mu, 0.0, tau * tau);
        for (double x : r) p *= normal_pdf(x, mu, sigma * sigma);
        return p;
      },
      -6, 6);
  double base = 1.0;
  SuffStats s;
  for (double x : r) {
    base *= normal_pdf(x, 0.0, sigma * sigma);
    s.add(x);
  }
  EXPECT_NEAR(log_marginal_likelihood(s, sigma, tau), std::log(integral / base), 1e-9);
}

TEST(MarginalLikelihood, ReadsOnlyCountAndSum) {
  SuffStats a{4, 1.5, 2.0}, b{4, 1.5, 9.0};
  EXPECT_EQ(log_marginal_likelihood(a, 0.5, 0.2), log_marginal_likelihood(b, 0.5, 0.2));
  SuffStats l{3, 0.4, 1.0}, r{5, -0.2, 2.0};
  EXPECT_EQ(log_marginal_likelihood(l + r, 0.5, 0.2), log_marginal_likelihood(SuffStats{8, 0.2, 3.0}, 0.5, 0.2));
}

TEST(DrawMu, ConjugateMoments) {
  Rng rng(21);
  const SuffStats s{10, 5.0, 0.0};
  const int draws = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = draw_mu(s, 1.0, 0.5, rng);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / draws;
  const double var = sumsq / draws - mean * mean;
  EXPECT_NEAR(mean, 5.0 * 0.25 / 3.5, 0.01 * 5.0 * 0.25 / 3.5);
  EXPECT_NEAR(var, 0.25 / 3.5, 0.01 * 0.25 / 3.5);
}

TEST(DrawMu, EmptyNodeDrawsFromPrior) {
  Rng rng(22);
  double sumsq = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double v = draw_mu(SuffStats{}, 1.0, 0.3, rng);
    sumsq += v * v;
  }
  EXPECT_NEAR(sumsq / draws, 0.09, 0.09 * 0.02);
}

TEST(DrawMu, LargeNodeFollowsData) {
  Rng rng(23);
  const SuffStats s{1000000, 0.37 * 1000000, 0.0};
  EXPECT_NEAR(draw_mu(s, 1.0, 0.5, rng), 0.37, 0.01);
}

TEST(DrawSigma, InverseChiSquareMoment) {
  Rng rng(31);
  const double nu = 3, lambda = 0.2, rss = 4.0;
  const std::uint64_t n = 50;
  double acc = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double s = draw_sigma(n, rss, nu, lambda, rng);
    ASSERT_GT(s, 0.0);
    acc += 1.0 / (s * s);
  }
  const double expect = (nu + n) / (nu * lambda + rss);
  EXPECT_NEAR(acc / draws, expect, 0.01 * expect);
}

TEST(DrawSigma, MonotoneInRssForFixedVariate) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    EXPECT_LT(draw_sigma(10, 1.0, 3, 0.1, a), draw_sigma(10, 2.0, 3, 0.1, b));
  }
}

TEST(Propose, SingleNodeAlwaysBirth) {
  Rng rng(41);
  const Tree t(0.0);
  const auto grid = uniform_grid(3, 10);
  for (int i = 0; i < 1000; ++i) {
    const Proposal p = propose(t, 0, grid, rng);
    EXPECT_EQ(p.move, Move::Birth);
    EXPECT_EQ(p.node, 1u);
  }
}

TEST(Propose, AncestorRuleTruncatesCutpoints) {
  Rng rng(42);
  const CutpointGrid grid(std::vector<std::vector<double>>{cutpoints_between(0.0, 1.0, 100)});
  Tree t(0.0);
  t.split(1, 0, 50, 0.0, 0.0);
  std::vector<int> counts(100, 0);
  int births_at_left = 0;
  for (int i = 0; i < 200000; ++i) {
    const Proposal p = propose(t, 0, grid, rng);
    if (p.move != Move::Birth || p.node != 2) continue;
    ++births_at_left;
    ASSERT_LT(p.cut, 50u);
    ++counts[p.cut];
  }
  // Uniform over {0..49}: every index within 4 standard errors.
  const double expect = births_at_left / 50.0;
  for (int c = 0; c < 50; ++c) EXPECT_NEAR(counts[c], expect, 4.0 * std::sqrt(expect));
}

TEST(Propose, NodeSelectionUniform) {
  Rng rng(43);
  const auto grid = uniform_grid(3, 50);
  Tree t(0.0);
  t.split(1, 0, 25, 0, 0);
  t.split(2, 1, 25, 0, 0);
  t.split(3, 2, 25, 0, 0);
  t.split(4, 0, 10, 0, 0);
  ASSERT_EQ(t.leaf_count(), 5u);
  std::map<NodeId, int> birth, death;
  int births = 0, deaths = 0;
  for (int i = 0; i < 100000; ++i) {
    const Proposal p = propose(t, 0, grid, rng);
    if (p.move == Move::Birth) {
      ++birth[p.node];
      ++births;
    } else if (p.move == Move::Death) {
      ++death[p.node];
      ++deaths;
    }
  }
  ASSERT_EQ(birth.size(), 5u);
  for (const auto& [id, c] : birth) {
    const double pr = 0.2, se = std::sqrt(births * pr * (1 - pr));
    EXPECT_NEAR(c, births * pr, 3 * se) << "leaf " << id;
  }
  // Nog nodes: 3 (children 6, 7) and 4 (children 8, 9).
  ASSERT_EQ(death.size(), 2u);
  for (const auto& [id, c] : death) {
    EXPECT_TRUE(id == 3 || id == 4);
    EXPECT_NEAR(c, deaths * 0.5, 3 * std::sqrt(deaths * 0.25));
  }
  EXPECT_NEAR(births, 50000, 3 * std::sqrt(25000.0));
}

TEST(Propose, NoLegalRuleGivesNullProposal) {
  Rng rng(44);
  const CutpointGrid grid(std::vector<std::vector<double>>{{0.5}});
  Tree t(0.0);
  t.split(1, 0, 0, 0, 0);
  int nulls = 0;
  for (int i = 0; i < 1000; ++i) {
    const Proposal p = propose(t, 0, grid, rng);
    if (p.is_null()) ++nulls;
  }
  EXPECT_NEAR(nulls, 500, 3 * std::sqrt(250.0));
}

TEST(AcceptRatio, EmptyChildrenBelowMinLeafRejected) {
  Rng rng(51);
  const auto grid = uniform_grid(2, 10);
  const Tree t(0.0);
  const Proposal p = propose(t, 0, grid, rng);
  PriorParams prior = default_prior();
  prior.min_leaf = 5;
  EXPECT_EQ(accept_log_ratio(p, MoveStats{}, 1.0, prior), -std::numeric_limits<double>::infinity());
}

TEST(AcceptRatio, BirthAndReverseDeathCancel) {
  Rng rng(52);
  const auto grid = uniform_grid(3, 20);
  const PriorParams prior = default_prior();
  for (int rep = 0; rep < 200; ++rep) {
    Tree t = random_tree(rng.index(6), grid, rng);
    const Proposal birth = propose(t, 0, grid, rng);
    if (birth.move != Move::Birth) continue;
    const MoveStats stats{SuffStats{7, rng.normal(), 3.0}, SuffStats{9, rng.normal(), 4.0}};
    const double up = accept_log_ratio(birth, stats, 0.3, prior);
    t.split(birth.node, birth.var, birth.cut, 0, 0);
    // Find the reversing death among death proposals on the grown tree.
    for (int tries = 0; tries < 1000; ++tries) {
      const Proposal death = propose(t, 0, grid, rng);
      if (death.move != Move::Death || death.node != birth.node) continue;
      const double down = accept_log_ratio(death, stats, 0.3, prior);
      EXPECT_NEAR(up + down, 0.0, 1e-12);
      break;
    }
  }
}

TEST(AcceptRatio, DependsOnlyOnChildStats) {
  Rng rng(53);
  const auto grid = uniform_grid(2, 10);
  const Proposal p = propose(Tree(0.0), 0, grid, rng);
  const MoveStats a{SuffStats{6, 1.25, 0.5}, SuffStats{8, -0.5, 0.25}};
  const MoveStats b{SuffStats{6, 1.25, 99.0}, SuffStats{8, -0.5, 77.0}};
  EXPECT_EQ(accept_log_ratio(p, a, 0.4, default_prior()), accept_log_ratio(p, b, 0.4, default_prior()));
}

TEST(AcceptRatio, GrowFormulaFromRoot) {
  // Root birth on a single-node tree: b = 1, P_birth = 1, one nog after.
  Rng rng(54);
  const auto grid = uniform_grid(2, 10);
  const Proposal p = propose(Tree(0.0), 0, grid, rng);
  const PriorParams prior = default_prior();
  const double a = prior.alpha, b = prior.beta;
  const double ps0 = a, ps1 = a * std::pow(2.0, -b);
  const double expect = std::log(ps0) + 2 * std::log(1 - ps1) - std::log(1 - ps0) + std::log(0.5 * 1) - std::log(1.0 * 1);
  EXPECT_NEAR(accept_log_ratio(p, MoveStats{}, 1.0, [&] {
                auto q = prior;
                q.min_leaf = 0;
                return q;
              }(),
                               false),
              expect, 1e-12);
}

TEST(ShardEngine, ResidualMatchesFullRecomputation) {
  auto engine = ShardEngine::with_blocks(toy_data(300, 3, 61), 3);
  warm_up(engine, 10, 25, 62);
  const auto fit = full_fit(engine);
  for (std::size_t i = 0; i < engine.rows(); ++i) {
    EXPECT_NEAR(engine.fit()[i], fit[i], 1e-8);
    EXPECT_NEAR(engine.residual()[i], engine.model_response()[i] - fit[i], 1e-8);
  }
}

TEST(ShardEngine, MoveAndLeafStatsMatchBruteForce) {
  auto engine = ShardEngine::with_blocks(toy_data(1000, 3, 63), 4);
  warm_up(engine, 8, 15, 64);
  Rng rng(65);
  const auto& grid = engine.grid();
  for (std::uint32_t j = 0; j < engine.forest().size(); ++j) {
    const Tree& tree = engine.forest()[j];
    // Partial residuals for tree j from scratch.
    std::vector<double> r(engine.rows());
    for (std::size_t i = 0; i < engine.rows(); ++i) {
      double others = 0.0;
      for (std::uint32_t k = 0; k < engine.forest().size(); ++k)
        if (k != j) others += engine.forest()[k].evaluate(engine.data().x.row(i), grid);
      r[i] = engine.model_response()[i] - others;
    }

    const auto leaves = tree.nodes(NodeKind::Terminal);
    std::vector<SuffStats> expect(leaves.size());
    for (std::size_t i = 0; i < engine.rows(); ++i) {
      const NodeId id = tree.leaf_for(engine.data().x.row(i), grid).id;
      for (std::size_t k = 0; k < leaves.size(); ++k)
        if (leaves[k]->id == id) expect[k].add(r[i]);
    }
    const auto got = engine.leaf_stats(j);
    ASSERT_EQ(got.size(), expect.size());
    std::vector<double> mus;
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].n, expect[k].n);
      EXPECT_NEAR(got[k].sum, expect[k].sum, 1e-9);
      EXPECT_NEAR(got[k].sumsq, expect[k].sumsq, 1e-9);
      mus.push_back(leaves[k]->mu);
    }
    engine.set_leaf_values(j, mus);

    Proposal p = propose(tree, j, grid, rng);
    if (p.is_null()) continue;
    MoveStats want;
    for (std::size_t i = 0; i < engine.rows(); ++i) {
      const auto x = engine.data().x.row(i);
      const TreeNode* node = &tree.root();
      bool in = false;
      while (true) {
        if (node->id == p.node) {
          in = true;
          break;
        }
        if (!node->left) break;
        node = x[node->var] < grid.value(node->var, node->cut) ? node->left.get() : node->right.get();
      }
      if (!in) continue;
      bool left;
      if (p.move == Move::Birth) {
        left = x[p.var] < grid.value(p.var, p.cut);
      } else {
        left = x[node->var] < grid.value(node->var, node->cut);
      }
      (left ? want.left : want.right).add(r[i]);
    }
    const MoveStats got_move = engine.move_stats(p);
    EXPECT_EQ(got_move.left.n, want.left.n);
    EXPECT_EQ(got_move.right.n, want.right.n);
    EXPECT_NEAR(got_move.left.sum, want.left.sum, 1e-9);
    EXPECT_NEAR(got_move.right.sum, want.right.sum, 1e-9);
    engine.reject(j);
  }
}

TEST(ShardEngine, EmptyRegionGivesZeroStats) {
  Dataset data = toy_data(100, 2, 66);
  for (std::size_t i = 0; i < data.rows(); ++i) data.x(i, 0) = std::abs(data.x(i, 0));  // nothing below 0
  auto engine = ShardEngine::with_blocks(data, 2);
  ModelSetup setup;
  setup.m = 1;
  setup.numcut = 10;
  setup.x_min = {-1.0, -1.0};
  setup.x_max = {1.0, 1.0};
  engine.setup(setup);
  Proposal p;
  p.move = Move::Birth;
  p.node = 1;
  p.var = 0;
  p.cut = 0;  // threshold -1 + 2/11: no row goes left
  const MoveStats s = engine.move_stats(p);
  EXPECT_EQ(s.left, SuffStats{});
  EXPECT_EQ(s.right.n, 100u);
}

TEST(ShardEngine, HalfShardsAddUp) {
  const Dataset data = toy_data(400, 3, 67);
  auto whole = ShardEngine::with_blocks(data, 2);
  auto first = ShardEngine(data.slice(0, 200), {200});
  auto second = ShardEngine(data.slice(200, 400), {200});
  ModelSetup setup;
  setup.m = 1;
  setup.numcut = 20;
  setup.scaling = ResponseScaling::from_range(-3, 3);
  setup.x_min = {-1, -1, -1};
  setup.x_max = {1, 1, 1};
  for (auto* e : {&whole, &first, &second}) e->setup(setup);
  Proposal p;
  p.move = Move::Birth;
  p.node = 1;
  p.var = 1;
  p.cut = 7;
  const MoveStats w = whole.move_stats(p);
  const MoveStats parts = first.move_stats(p) + second.move_stats(p);
  EXPECT_EQ(w, parts);  // same two blocks, same order
  EXPECT_EQ(whole.rss(), first.rss() + second.rss());
}

TEST(Chain, MinLeafAboveNKeepsSingleNodes) {
  auto engine = ShardEngine::with_blocks(toy_data(20, 2, 71), 1);
  SamplerSettings s;
  s.prior.m = 1;
  s.prior.min_leaf = 21;
  Chain chain(s, engine, 72);
  for (int i = 0; i < 200; ++i) {
    const auto log = chain.step();
    EXPECT_EQ(log.birth_accepted, 0u);
  }
  EXPECT_EQ(chain.forest()[0].leaf_count(), 1u);
}

TEST(Chain, ReplicaMatchesMasterForest) {
  auto engine = ShardEngine::with_blocks(toy_data(200, 3, 73), 2);
  SamplerSettings s;
  s.prior.m = 5;
  Chain chain(s, engine, 74);
  for (int i = 0; i < 30; ++i) {
    chain.step();
    ASSERT_EQ(forest_hash(chain.forest()), forest_hash(engine.forest()));
  }
}

TEST(Chain, FitsSimpleSignal) {
  const Dataset data = toy_data(500, 3, 75, 0.1);
  auto engine = ShardEngine::with_blocks(data, 1);
  SamplerSettings s;
  s.prior.m = 20;
  RunPlan plan{300, 100, 1, 76};
  const ChainResult r = run_chain(s, engine, plan);
  EXPECT_EQ(r.posterior.snapshots.size(), 200u);
  EXPECT_EQ(r.log.size(), 300u);
  double sigma = 0.0;
  for (std::size_t i = 100; i < r.log.size(); ++i) sigma += r.log[i].sigma;
  sigma /= 200.0;
  EXPECT_GT(sigma, 0.05);
  EXPECT_LT(sigma, 0.25);
}

TEST(RunPlan, EmptyPosteriorRejected) {
  RunPlan plan{100, 100, 1, 1};
  EXPECT_THROW(plan.validate(), Error);
  plan = {101, 100, 3, 1};
  EXPECT_EQ(plan.kept(), 1u);
  plan = {110, 100, 3, 1};
  EXPECT_EQ(plan.kept(), 4u);
}
