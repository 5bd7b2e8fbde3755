#pragma once

#include "phishintel/pipeline.hpp"
#include "phishintel/synth.hpp"

namespace testsupport {

// In-memory resources mirroring what load_resources builds from the saved fixtures.
inline phishintel::PipelineResources resources_for(const phishintel::SyntheticCorpus& c,
                                                   const phishintel::PipelineConfig& cfg) {
  using namespace phishintel;
  PipelineResources r;
  r.ranks = RankList(cfg.rank_cutoff);
  for (const auto& [rank, domain] : c.ranks) r.ranks.add(domain, rank);
  r.shorteners = DomainSet(c.shorteners.begin(), c.shorteners.end());
  r.dynamic_dns = DomainSet(c.dynamic_dns.begin(), c.dynamic_dns.end());
  auto whois = std::make_unique<FixtureWhois>();
  for (const auto& [d, t] : c.whois) whois->set(d, t);
  r.whois = std::move(whois);
  const DefaultEmbedders defaults(cfg.schema);
  r.visual = std::make_unique<HashingVisualEmbedder>(defaults.visual);
  r.context = std::make_unique<HashingContextEmbedder>(defaults.context);
  r.categories = categorize_users(c.authors, cfg.profile_terms);
  r.max_age_days = cfg.whois_max_age_days;
  return r;
}

inline phishintel::LabelMap labels_of(const phishintel::SyntheticCorpus& c) {
  phishintel::LabelMap m;
  for (std::size_t i = 0; i < c.posts.size(); ++i) m[c.posts[i].post_id] = c.labels[i];
  return m;
}

}  // namespace testsupport
