#ifndef MONOALIGN_SERVER_HPP
#define MONOALIGN_SERVER_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "monoalign/experiment.hpp"

namespace monoalign {

/// Progress of one rater through the fixed task order.
struct SessionState {
  std::string rater;
  std::vector<std::string> remaining;  // task ids, in presentation order
  std::size_t completed = 0;
  std::size_t total = 0;
};

/// Outcome of one store operation, already shaped as an HTTP reply.
struct Reply {
  int status = 200;
  nlohmann::json body;
};

/// Server-side state of a rating experiment. Every accepted response is
/// appended to a JSON-lines log before it is acknowledged; constructing a store
/// over an existing log replays it, so a restart resumes every session exactly.
///
/// JSON contract (all bodies are objects):
///   next_task     -> {"state":"task","task":{...blinded view...},"completed":k,"total":n}
///                  | {"state":"done","completed":n,"total":n}
///   post_response <- {"task_id","choice":"left"|"right","confidence":1..5}
///                 -> {"state":"recorded","task_id","completed","total"}
///   errors        -> {"error":<code>,"message":<text>} with 400, 401, 403 or 409
class RatingStore {
 public:
  using Clock = std::function<std::string()>;

  RatingStore(ExperimentBundle bundle, std::filesystem::path log_path, Clock clock = {});

  Reply next_task(std::string_view token) const;
  Reply post_response(std::string_view token, const nlohmann::json& body);
  /// Response log joined with tasks and the side mapping, one JSON object per
  /// line. Empty optional when the token is not the admin token.
  std::optional<std::string> export_results(std::string_view token) const;

  std::optional<std::string> rater_of(std::string_view token) const;
  SessionState session(const std::string& rater) const;
  std::vector<Response> responses() const;
  const ExperimentBundle& bundle() const { return bundle_; }

 private:
  struct Session {
    std::vector<std::size_t> tasks;  // indices into bundle_.tasks
    std::size_t completed = 0;
  };

  std::optional<Reply> check(const std::string& rater, const Response& r) const;
  void apply(const std::string& rater, const Response& r);

  ExperimentBundle bundle_;
  std::filesystem::path log_path_;
  Clock clock_;
  std::map<std::string, std::string> rater_by_token_;
  std::map<std::string, std::size_t> task_index_;
  std::map<std::string, Session> sessions_;
  std::vector<Response> log_;
  mutable std::mutex mutex_;
};

/// One export line for a response (the unblinded join used by analysis).
nlohmann::json export_line(const Response& r, const TaskItem& t);

/// HTTP front end of a RatingStore.
///   GET  /task      Authorization: Bearer <rater token>
///   POST /response  Authorization: Bearer <rater token>, JSON body
///   GET  /export    Authorization: Bearer <admin token>, JSON-lines body
///   GET  /static/*  files under `static_dir` (study materials)
///   GET  /          built-in rating page
class RatingServer {
 public:
  RatingServer(RatingStore& store, std::filesystem::path static_dir = {});
  ~RatingServer();
  RatingServer(const RatingServer&) = delete;
  RatingServer& operator=(const RatingServer&) = delete;

  /// Binds and serves until stop(); port 0 picks a free port.
  bool listen(const std::string& host, int port);
  /// Binds without serving; returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves on a socket opened by bind().
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// The rating page served at "/".
std::string_view rating_page_html();

}  // namespace monoalign

#endif  // MONOALIGN_SERVER_HPP
