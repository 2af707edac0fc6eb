#include "loopkit/propagation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <variant>

namespace loopkit {

namespace {

using PairResult = std::variant<std::monostate, SimilarityEstimate, std::string>;

// Pair estimates are independent, so they are computed up front on a small
// worker pool; chaining stays sequential.
std::vector<PairResult> estimate_pairs(std::size_t pairs, const CorrespondenceProvider& provider,
                                       const PropagationConfig& config) {
  std::vector<PairResult> results(pairs);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_failure{pairs};
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs; i = next++) {
      if (i > first_failure.load()) continue;
      try {
        results[i] = estimate_similarity_ransac(provider.matches(i), config.ransac);
      } catch (const Error& e) {
        results[i] = e.kind() + ": " + e.what();
      } catch (const std::exception& e) {
        results[i] = std::string(e.what());
      }
      if (std::holds_alternative<std::string>(results[i])) {
        std::size_t seen = first_failure.load();
        while (i < seen && !first_failure.compare_exchange_weak(seen, i)) {
        }
      }
    }
  };
  unsigned threads = config.threads > 0 ? unsigned(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, unsigned(std::max<std::size_t>(pairs, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace

std::vector<Correspondence> ImageMatchProvider::matches(std::size_t from) const {
  return detect_and_match(load_frame_(from), load_frame_(from + 1), config_);
}

std::vector<Correspondence> FixedMatchProvider::matches(std::size_t from) const {
  if (from >= pairs_.size()) return {};
  return pairs_[from];
}

SequenceLabels propagate_labels(std::size_t frame_count, std::span<const OrientedLabel> seed,
                                const CorrespondenceProvider& provider,
                                const PropagationConfig& config) {
  if (frame_count == 0) throw InvalidArgument("sequence has no frames");
  if (seed.empty()) throw InvalidArgument("seed annotation is empty");

  SequenceLabels out;
  out.frames.emplace_back(seed.begin(), seed.end());
  out.seed_index.emplace_back();
  for (std::size_t i = 0; i < seed.size(); ++i) out.seed_index[0].push_back(i);
  out.chained.push_back(Similarity2::identity());

  const bool check_frame = config.frame_width > 0 && config.frame_height > 0;
  const Aabb region = frame_region(config.frame_width, config.frame_height);

  auto pair_results = estimate_pairs(frame_count - 1, provider, config);
  for (std::size_t i = 0; i + 1 < frame_count; ++i) {
    if (auto* failure = std::get_if<std::string>(&pair_results[i]))
      throw PropagationBroken(i, *failure, std::move(out));
    SimilarityEstimate est = std::move(std::get<SimilarityEstimate>(pair_results[i]));

    std::vector<OrientedLabel> next;
    std::vector<std::size_t> next_index;
    const auto& prev = out.frames.back();
    for (std::size_t j = 0; j < prev.size(); ++j) {
      const Obb moved = transform_obb(est.transform, prev[j].obb);
      if (check_frame && area_inside(moved, region) <= 0.0) {
        const DroppedLabel drop{i + 1, out.seed_index.back()[j]};
        out.dropped.push_back(drop);
        if (config.on_drop) config.on_drop(drop);
        continue;
      }
      next.push_back(OrientedLabel::from_obb(moved, prev[j].class_id, prev[j].confidence));
      next_index.push_back(out.seed_index.back()[j]);
    }

    out.pairwise.push_back(est.transform);
    out.chained.push_back(est.transform * out.chained.back());
    out.estimates.push_back(std::move(est));
    out.frames.push_back(std::move(next));
    out.seed_index.push_back(std::move(next_index));
  }
  return out;
}

}  // namespace loopkit
