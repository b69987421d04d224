#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>

#include "cdaug/augment.hpp"
#include "cdaug/codec.hpp"
#include "cdaug/digest.hpp"
#include "cdaug/service.hpp"
#include "support.hpp"

namespace cdaug {
namespace {

using namespace std::chrono_literals;

AugmentationJob wait_terminal(const CollabService& service, const std::string& id) {
  const auto deadline = std::chrono::steady_clock::now() + 30s;
  while (std::chrono::steady_clock::now() < deadline) {
    auto job = service.get_status(id);
    if (is_terminal(job.status)) return job;
    std::this_thread::sleep_for(2ms);
  }
  throw std::runtime_error("job " + id + " did not finish");
}

/// Tracks how many calls per user (named inside the subject) are in flight.
class ConcurrencyProbe final : public ChatBackend {
 public:
  BackendCapability capability() const override { return {"probe", true}; }
  std::string complete(const ChatRequest& request) override {
    const std::string user = request.subject.find("ann") != std::string::npos ? "ann" : "ben";
    {
      std::lock_guard lock(mutex_);
      max_active_[user] = std::max(max_active_[user], ++active_[user]);
    }
    std::this_thread::sleep_for(1ms);
    {
      std::lock_guard lock(mutex_);
      --active_[user];
    }
    return mock_.complete(request);
  }
  int max_active(const std::string& user) {
    std::lock_guard lock(mutex_);
    return max_active_[user];
  }

 private:
  std::mutex mutex_;
  std::map<std::string, int> active_, max_active_;
  MockChatBackend mock_;
};

class ServiceTest : public ::testing::Test {
 protected:
  std::unique_ptr<CollabService> make(std::shared_ptr<ChatBackend> backend = std::make_shared<MockChatBackend>(),
                                      std::shared_ptr<EntailmentScorer> scorer =
                                          std::make_shared<LexicalEntailmentScorer>(),
                                      bool auto_run = true, std::size_t workers = 2) {
    ServiceOptions options;
    options.data_dir = dir.path();
    options.workers = workers;
    options.auto_run = auto_run;
    return std::make_unique<CollabService>(options, std::move(backend), std::move(scorer), test::load_catalog(),
                                           test::load_manifest());
  }

  std::string in_process_bytes(const UserProfile& profile, const GenerationConfig& config,
                               const FilterThresholds& thresholds) {
    MockChatBackend mock;
    LexicalEntailmentScorer scorer;
    const auto catalog = test::load_catalog();
    const auto manifest = test::load_manifest();
    AugmentationEngine engine(mock, catalog, manifest);
    const auto augmented = engine.augment_user(profile, config);
    return encode_filtered(select(profile, augmented.samples, thresholds, scorer).filtered);
  }

  test::TempDir dir;
};

TEST_F(ServiceTest, JobRunsToDoneAndServesPipelineBytes) {
  auto service = make();
  const auto profile = test::movie_tag_profile("u1", 2);
  const auto id = service->submit_job(profile, {}, {});
  const auto job = wait_terminal(*service, id);
  ASSERT_EQ(job.status, JobStatus::kDone) << job.cause;
  EXPECT_EQ(job.counters.generated, 10u);
  EXPECT_EQ(job.counters.kept, 8u);
  const auto download = service->download_filtered(id);
  EXPECT_EQ(download.bytes, in_process_bytes(profile, {}, {}));
  EXPECT_EQ(download.digest, sha256_hex(download.bytes));
  EXPECT_EQ(*job.digest, download.digest);
  EXPECT_EQ(decode_reports(service->download_reports(id)).size(), 10u);
}

TEST_F(ServiceTest, RejectsInvalidProfileWithViolations) {
  auto service = make();
  UserProfile profile{"u", TaskId::kMovieTag, {{"fine text", "not-a-tag", 0}}};
  try {
    service->submit_job(profile, {}, {});
    FAIL() << "expected rejection";
  } catch (const ProfileRejected& e) {
    ASSERT_EQ(e.result().violations.size(), 1u);
    EXPECT_EQ(e.result().violations[0].rule, "label-in-set");
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
  GenerationConfig bad;
  bad.k = 0;
  EXPECT_THROW(service->submit_job(test::movie_tag_profile("u", 1), bad, {}), Error);
}

TEST_F(ServiceTest, IdempotencyKeyIsScopedPerUser) {
  auto service = make(std::make_shared<MockChatBackend>(), std::make_shared<LexicalEntailmentScorer>(), false);
  const auto a = service->submit_job(test::movie_tag_profile("alice", 1), {}, {}, "k1");
  const auto again = service->submit_job(test::movie_tag_profile("alice", 1), {}, {}, "k1");
  const auto b = service->submit_job(test::movie_tag_profile("bob", 1), {}, {}, "k1");
  const auto c = service->submit_job(test::movie_tag_profile("alice", 1), {}, {}, "k2");
  EXPECT_EQ(a, again);
  EXPECT_NE(a, b);
  EXPECT_NE(a, c);
}

TEST_F(ServiceTest, ManualRunAndStateGuards) {
  auto service = make(std::make_shared<MockChatBackend>(), std::make_shared<LexicalEntailmentScorer>(), false);
  const auto id = service->submit_job(test::movie_tag_profile("u", 1), {}, {});
  EXPECT_EQ(service->get_status(id).status, JobStatus::kQueued);
  try {
    service->download_filtered(id);
    FAIL() << "expected conflict";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConflict);
  }
  EXPECT_EQ(service->run_job(id), JobStatus::kDone);
  EXPECT_EQ(service->run_job(id), JobStatus::kDone);
  try {
    service->get_status("ffff");
    FAIL() << "expected not-found";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotFound);
  }
}

TEST_F(ServiceTest, BackendOutageFailsJob) {
  auto service = make(std::make_shared<test::DeadBackend>());
  const auto id = service->submit_job(test::movie_tag_profile("u", 1), {}, {});
  const auto job = wait_terminal(*service, id);
  EXPECT_EQ(job.status, JobStatus::kFailed);
  EXPECT_TRUE(job.cause.starts_with("augmentation-failed")) << job.cause;
  EXPECT_THROW(service->download_filtered(id), Error);
}

TEST_F(ServiceTest, ScorerOutageFailsJob) {
  auto service = make(std::make_shared<MockChatBackend>(), std::make_shared<test::DeadScorer>());
  const auto id = service->submit_job(test::movie_tag_profile("u", 1), {}, {});
  const auto job = wait_terminal(*service, id);
  EXPECT_EQ(job.status, JobStatus::kFailed);
  EXPECT_TRUE(job.cause.starts_with("scorer-unavailable")) << job.cause;
}

TEST_F(ServiceTest, JobsOfOneUserNeverOverlap) {
  auto probe = std::make_shared<ConcurrencyProbe>();
  {
    ServiceOptions options;
    options.data_dir = dir.path();
    options.workers = 4;
    options.engine_parallelism = 1;
    CollabService service(options, probe, std::make_shared<LexicalEntailmentScorer>(), test::load_catalog(),
                          test::load_manifest());
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) {
      for (const std::string user : {"ann", "ben"}) {
        UserProfile profile{user, TaskId::kNewsHeadline, {}};
        profile.history.push_back({user + " story number " + std::to_string(i) + " about things", "headline", 0});
        ids.push_back(service.submit_job(profile, {}, {}));
      }
    }
    for (const auto& id : ids) EXPECT_EQ(wait_terminal(service, id).status, JobStatus::kDone);
  }
  EXPECT_EQ(probe->max_active("ann"), 1);
  EXPECT_EQ(probe->max_active("ben"), 1);
}

TEST_F(ServiceTest, RecoveryFailsInterruptedAndRequeuesQueued) {
  std::string queued_id, done_id;
  {
    auto service = make(std::make_shared<MockChatBackend>(), std::make_shared<LexicalEntailmentScorer>(), false);
    queued_id = service->submit_job(test::movie_tag_profile("u", 1), {}, {}, "key");
    done_id = service->submit_job(test::movie_tag_profile("v", 1), {}, {});
    ASSERT_EQ(service->run_job(done_id), JobStatus::kDone);
  }
  JobStore store(dir.path());
  AugmentationJob interrupted;
  interrupted.job_id = "abc123";
  interrupted.user_id = "w";
  interrupted.status = JobStatus::kFiltering;
  interrupted.created = interrupted.updated = 100;
  store.write_job(interrupted);

  auto service = make();
  EXPECT_EQ(service->get_status("abc123").status, JobStatus::kFailed);
  EXPECT_EQ(service->get_status("abc123").cause, "interrupted");
  EXPECT_EQ(wait_terminal(*service, queued_id).status, JobStatus::kDone);
  EXPECT_EQ(service->get_status(done_id).status, JobStatus::kDone);
  // The idempotency index survives the restart.
  EXPECT_EQ(service->submit_job(test::movie_tag_profile("u", 1), {}, {}, "key"), queued_id);
  // Logical clock keeps increasing past persisted values.
  EXPECT_GT(service->get_status("abc123").updated, 100u);
}

TEST_F(ServiceTest, DoneJobWithMissingBlobIsFailedOnRestart) {
  std::string id;
  {
    auto service = make(std::make_shared<MockChatBackend>(), std::make_shared<LexicalEntailmentScorer>(), false);
    id = service->submit_job(test::movie_tag_profile("u", 1), {}, {});
    service->run_job(id);
  }
  std::filesystem::remove_all(dir / "blobs");
  auto service = make();
  EXPECT_EQ(service->get_status(id).status, JobStatus::kFailed);
  EXPECT_EQ(service->get_status(id).cause, "dataset-missing");
}

TEST_F(ServiceTest, CorruptedBlobIsDetectedOnDownload) {
  auto service = make(std::make_shared<MockChatBackend>(), std::make_shared<LexicalEntailmentScorer>(), false);
  const auto id = service->submit_job(test::movie_tag_profile("u", 2), {}, {});
  service->run_job(id);
  const auto digest = *service->get_status(id).digest;
  {
    std::ofstream out(dir / "blobs" / digest, std::ios::binary | std::ios::app);
    out << "x";
  }
  try {
    service->download_filtered(id);
    FAIL() << "expected integrity error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIntegrity);
  }
}

TEST(JobStore, BlobsAreContentAddressed) {
  test::TempDir dir;
  JobStore store(dir.path());
  const auto digest = store.put_blob("hello");
  EXPECT_EQ(digest, "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
  EXPECT_EQ(store.put_blob("hello"), digest);
  EXPECT_EQ(store.get_blob(digest), "hello");
  EXPECT_THROW(store.get_blob(std::string(64, '0')), Error);
  EXPECT_EQ(JobStore::user_key("alice").size(), 32u);
  EXPECT_NE(JobStore::user_key("alice"), JobStore::user_key("bob"));
}

TEST(JobStore, StatusMachine) {
  EXPECT_TRUE(can_transition(JobStatus::kQueued, JobStatus::kAugmenting));
  EXPECT_TRUE(can_transition(JobStatus::kAugmenting, JobStatus::kFiltering));
  EXPECT_TRUE(can_transition(JobStatus::kFiltering, JobStatus::kDone));
  EXPECT_TRUE(can_transition(JobStatus::kQueued, JobStatus::kFailed));
  EXPECT_FALSE(can_transition(JobStatus::kQueued, JobStatus::kDone));
  EXPECT_FALSE(can_transition(JobStatus::kDone, JobStatus::kFailed));
  EXPECT_FALSE(can_transition(JobStatus::kFailed, JobStatus::kQueued));
  for (auto s : {JobStatus::kQueued, JobStatus::kAugmenting, JobStatus::kFiltering, JobStatus::kDone,
                 JobStatus::kFailed}) {
    EXPECT_EQ(parse_job_status(to_string(s)), s);
  }
}

TEST(JobStore, AtomicWriteReplacesContent) {
  test::TempDir dir;
  write_file_atomic(dir / "f", "one");
  write_file_atomic(dir / "f", "two");
  EXPECT_EQ(read_file(dir / "f"), "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

}  // namespace
}  // namespace cdaug
