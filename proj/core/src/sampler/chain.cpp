#include "pbart/sampler/chain.hpp"

#include <cmath>

#include "pbart/error.hpp"
#include "pbart/sampler/conjugate.hpp"
#include "pbart/sampler/proposal.hpp"

namespace pbart {

Chain::Chain(SamplerSettings settings, StatsBackend& backend, std::uint64_t seed)
    : settings_(std::move(settings)), backend_(backend), rng_(seed) {}

void Chain::initialize() {
  const DataSummary summary = backend_.summarize();
  if (summary.n == 0) throw Error("no rows to fit");
  n_total_ = summary.n;

  setup_.m = settings_.prior.m;
  setup_.numcut = settings_.numcut;
  setup_.scaling = settings_.rescale ? ResponseScaling::from_range(summary.y_min, summary.y_max) : ResponseScaling{};
  setup_.x_min = summary.x_min;
  setup_.x_max = summary.x_max;
  grid_ = setup_.grid();

  const double model_sd = std::sqrt(summary.y_variance()) / setup_.scaling.width();
  prior_ = calibrate_prior(settings_.prior, model_sd);
  if (settings_.fixed_sigma) {
    sigma_ = *settings_.fixed_sigma;
  } else if (settings_.sigma_init) {
    sigma_ = *settings_.sigma_init;
  } else {
    sigma_ = model_sd > 0.0 ? model_sd : 1.0;
  }
  if (!(sigma_ > 0.0)) throw ConfigError("sigma", "initial sigma must be positive");

  backend_.setup(setup_);
  forest_.assign(prior_.m, Tree(0.0));
  iteration_ = 0;
  initialized_ = true;
}

IterationLog Chain::step() {
  if (!initialized_) initialize();
  IterationLog log;
  log.iteration = iteration_;
  backend_.begin_iteration(iteration_);

  const bool use_likelihood = !settings_.prior_only;
  std::size_t total_leaves = 0;
  for (std::uint32_t j = 0; j < prior_.m; ++j) {
    Tree& tree = forest_[j];
    const Proposal prop = propose(tree, j, grid_, rng_);
    if (prop.move == Move::Birth) ++log.birth_proposed;
    if (prop.move == Move::Death) ++log.death_proposed;

    if (prop.is_null()) {
      backend_.reject(j);
    } else {
      const MoveStats stats = backend_.move_stats(prop);
      const double log_ratio = accept_log_ratio(prop, stats, sigma_, prior_, use_likelihood);
      const double u = rng_.uniform();
      if (std::log(u) < log_ratio) {
        if (prop.move == Move::Birth) {
          const double mu_l = draw_mu(stats.left, sigma_, prior_.tau, rng_);
          const double mu_r = draw_mu(stats.right, sigma_, prior_.tau, rng_);
          tree.split(prop.node, prop.var, prop.cut, mu_l, mu_r);
          backend_.accept_birth(j, prop.node, prop.var, prop.cut, mu_l, mu_r);
          ++log.birth_accepted;
        } else {
          const double mu = draw_mu(stats.merged(), sigma_, prior_.tau, rng_);
          tree.collapse(prop.node, mu);
          backend_.accept_death(j, prop.node, mu);
          ++log.death_accepted;
        }
      } else {
        backend_.reject(j);
      }
    }

    const auto stats = backend_.leaf_stats(j);
    auto leaves = tree.nodes(NodeKind::Terminal);
    if (stats.size() != leaves.size()) throw ProtocolError("leaf statistics count does not match the tree");
    std::vector<double> mus(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      mus[k] = draw_mu(stats[k], sigma_, prior_.tau, rng_);
      leaves[k]->mu = mus[k];
    }
    backend_.set_leaf_values(j, mus);
    total_leaves += leaves.size();
  }

  if (!settings_.fixed_sigma) {
    const double rss = backend_.rss();
    sigma_ = draw_sigma(n_total_, rss, prior_.nu, prior_.lambda, rng_);
  }
  backend_.end_iteration(forest_, sigma_);

  log.sigma = sigma_ * setup_.scaling.width();
  log.mean_leaves = static_cast<double>(total_leaves) / prior_.m;
  ++iteration_;
  return log;
}

void RunPlan::validate() const {
  if (thin < 1) throw ConfigError("thin", "must be at least 1");
  if (draws <= burn) throw ConfigError("draws", "must exceed burn (empty posterior)");
}

ChainResult run_chain(const SamplerSettings& settings, StatsBackend& backend, const RunPlan& plan,
                      const std::function<void(const IterationLog&)>& on_iteration) {
  plan.validate();
  Chain chain(settings, backend, plan.seed);
  chain.initialize();

  ChainResult result;
  result.posterior.m = chain.prior().m;
  result.posterior.d = static_cast<std::uint32_t>(chain.grid().num_variables());
  result.posterior.numcut = settings.numcut;
  result.posterior.scaling = chain.model_setup().scaling;
  result.posterior.grid = chain.grid();
  result.log.reserve(plan.draws);
  result.posterior.snapshots.reserve(plan.kept());

  for (std::uint32_t it = 0; it < plan.draws; ++it) {
    IterationLog log = chain.step();
    if (on_iteration) on_iteration(log);
    result.log.push_back(log);
    if (it >= plan.burn && (it - plan.burn) % plan.thin == 0) {
      result.posterior.snapshots.push_back(chain.snapshot());
    }
  }
  return result;
}

}  // namespace pbart
