#ifndef CHURNSTORE_DATASTORE_HPP
#define CHURNSTORE_DATASTORE_HPP

#include <churnstore/committee.hpp>
#include <churnstore/erasure.hpp>
#include <churnstore/hash.hpp>
#include <churnstore/landmarks.hpp>
#include <churnstore/messages.hpp>

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace churnstore {

enum class StorageMode : std::uint8_t { Replicate, Erasure };
std::string_view to_string(StorageMode m);
StorageMode parse_mode(std::string_view text);

struct DataItem {
  Digest item_id{};
  Bytes payload;
  NodeId origin = kNoNode;
  Round stored_round = 0;

  static DataItem make(std::vector<std::uint8_t> payload, NodeId origin, Round r);
};

enum class SearchStatus { Pending, Success, NotFound, RequesterGone, InsufficientSamples };
std::string_view to_string(SearchStatus s);

struct SearchResult {
  std::uint32_t task = 0;
  std::uint32_t storage_task = 0;
  Digest item_id{};
  NodeId requester = kNoNode;
  Round requested_round = 0;
  bool success = false;
  NodeId holder = kNoNode;
  Round rounds_elapsed = 0;
  std::uint64_t messages_used = 0;
  SearchStatus status = SearchStatus::Pending;
};

struct TaggedHealth {
  std::uint32_t task = 0;
  StorageMode mode = StorageMode::Replicate;
  CommitteeHealth health;
};

struct StorageOutcome {
  std::uint32_t task = 0;
  Digest item_id{};
  StorageMode mode = StorageMode::Replicate;
  std::uint32_t h = 0;
  Round stored_round = 0;
  Round end_round = kNever;  // death of the committee, kNever while alive
  bool lost = false;         // task state could not be handed over
  std::uint32_t epochs = 0;
  std::uint32_t reconstruction_failures = 0;
  std::uint32_t fallbacks = 0;
};

struct DatastoreParams {
  double epsilon = 0.5;
  int tree_depth = 0;
  double availability_threshold = 1.0;
  std::uint32_t search_lifetime = 0;  // rounds; 4τ by default
  std::uint32_t search_h = 2;
};

/// Persistent storage (committee + storage landmarks per item) and retrieval
/// (search committee + search landmarks per request).
class Datastore {
 public:
  Datastore(const DynamicNetworkSchedule& schedule, DatastoreParams params);
  ~Datastore();
  Datastore(const Datastore&) = delete;
  Datastore& operator=(const Datastore&) = delete;

  /// Node u stores `item` in the current round. Returns the task tag.
  std::uint32_t store(NodeId u, DataItem item, StorageMode mode, std::uint32_t h, ProtocolContext& ctx);
  /// Node u asks for the item of `storage_task`. Returns the search task tag.
  std::uint32_t retrieve(NodeId u, std::uint32_t storage_task, ProtocolContext& ctx);

  void on_message(const Message& m, ProtocolContext& ctx);
  void tick(ProtocolContext& ctx);

  /// Live storage landmarks of the current generation among nodes present
  /// throughout [r, r+τ], against threshold·√n.
  bool is_available(std::uint32_t storage_task, Round r, const WalkConfig& cfg, std::uint64_t* landmarks = nullptr) const;

  const LandmarkStore& landmarks() const { return store_; }
  const std::vector<SearchResult>& searches() const { return searches_; }
  const std::vector<TaggedHealth>& health() const { return health_; }
  const std::vector<BuildReport>& builds() const { return builds_; }
  std::vector<StorageOutcome> storage_outcomes() const;
  const std::vector<std::uint32_t>& storage_tasks() const { return storage_ids_; }
  std::size_t live_committees() const;
  /// Replica or piece holders of a storage task right now.
  std::size_t holders(std::uint32_t storage_task) const;
  const Committee* committee_of(std::uint32_t task) const;
  /// Storage tasks whose handover check failed at least once.
  std::uint64_t reconstruction_failures() const;
  std::uint64_t committee_deaths() const { return deaths_; }

  struct StorageTask;
  struct SearchTask;

 private:
  void on_inquiry(const Message& m, ProtocolContext& ctx);
  bool useful(const LandmarkRecord& rec, Round r) const;
  void finish_search(SearchTask& s, SearchStatus status, ProtocolContext& ctx);
  std::uint32_t next_task();

  const DynamicNetworkSchedule& schedule_;
  DatastoreParams params_;
  LandmarkStore store_;
  std::map<std::uint32_t, std::unique_ptr<StorageTask>> storage_;
  std::map<std::uint32_t, std::unique_ptr<SearchTask>> search_;
  std::vector<std::uint32_t> storage_ids_;
  std::vector<SearchResult> searches_;
  std::vector<TaggedHealth> health_;
  std::vector<BuildReport> builds_;
  std::uint32_t tasks_ = 0;
  std::uint64_t deaths_ = 0;
};

}  // namespace churnstore

#endif  // CHURNSTORE_DATASTORE_HPP
