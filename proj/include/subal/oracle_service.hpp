#pragma once

// Human-in-the-loop oracle over HTTP.
//
//   GET  /next    200 {point_id, payload_kind, payload, classes, progress} or 204
//   POST /label   {point_id, class} -> 200 {accepted: true} | 400 | 409 | 422
//   GET  /status  {queried, budget, objective, done, error}
//
// The experiment runs on a worker thread and blocks on each answer; labels
// are checkpointed after every answer so an interrupted session resumes by
// replaying them.

#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "subal/harness.hpp"

namespace httplib {
class Server;
}

namespace subal {

// Oracle whose answers arrive from another thread.
class PendingQueryOracle : public Oracle {
 public:
  enum class Submit { kAccepted, kStale, kBadClass };

  PendingQueryOracle(int num_classes, std::chrono::duration<double> timeout)
      : num_classes_(num_classes), timeout_(timeout) {}

  // Publishes `id` as pending and waits for submit(); throws kOracleError on
  // timeout or close().
  int answer(PointId id) override;

  std::optional<PointId> pending() const;
  Submit submit(PointId id, int cls);
  void close();

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int num_classes_;
  std::chrono::duration<double> timeout_;  // <= 0 waits forever
  std::optional<PointId> pending_;
  std::optional<int> answer_;
  bool closed_ = false;
};

// Bytes shown to the annotator for a grayscale image row: per-image min-max
// scaled to 0..255, row-major.
std::string image_bytes(const Eigen::Ref<const Vector>& pixels);

class OracleService {
 public:
  // `display` supplies the payloads (raw points before preprocessing);
  // `data` is what the algorithm sees.  Both must have the same rows.
  OracleService(ExperimentConfig config, Dataset data, Dataset display, std::optional<Matrix> affinity,
                std::string static_dir = {});
  ~OracleService();

  OracleService(const OracleService&) = delete;
  OracleService& operator=(const OracleService&) = delete;

  // Binds the listener; port 0 picks a free port.  Returns the bound port
  // or throws kIoError.
  int bind(const std::string& host, int port);

  // Starts the HTTP listener and the experiment thread.
  void start();

  // Blocks until the experiment finishes; rethrows its error.
  ExperimentCurve wait();

  void stop();

  bool done() const;

 private:
  void install_routes();
  void run_loop();
  std::string status_json() const;

  ExperimentConfig config_;
  Dataset data_;
  Dataset display_;
  std::optional<Matrix> affinity_;
  std::string static_dir_;
  std::unique_ptr<httplib::Server> server_;
  PendingQueryOracle oracle_;

  mutable std::mutex state_mu_;
  std::size_t queried_ = 0;
  double objective_ = 0.0;
  bool done_ = false;
  std::string error_;
  std::exception_ptr failure_;
  ExperimentCurve curve_;

  std::thread listener_;
  std::thread worker_;
};

}  // namespace subal
