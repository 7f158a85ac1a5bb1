#include "subal/oracle_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "subal/error.hpp"

namespace subal {

using nlohmann::json;

int PendingQueryOracle::answer(PointId id) {
  std::unique_lock lock(mu_);
  if (closed_) throw Error(ErrorCode::kOracleError, "oracle closed");
  pending_ = id;
  answer_.reset();
  const auto ready = [&] { return answer_.has_value() || closed_; };
  if (timeout_.count() > 0) {
    if (!cv_.wait_for(lock, timeout_, ready)) {
      pending_.reset();
      throw Error(ErrorCode::kOracleError, "timed out waiting for a label for point " + std::to_string(id));
    }
  } else {
    cv_.wait(lock, ready);
  }
  pending_.reset();
  if (!answer_) throw Error(ErrorCode::kOracleError, "oracle closed while waiting for point " + std::to_string(id));
  const int cls = *answer_;
  answer_.reset();
  return cls;
}

std::optional<PointId> PendingQueryOracle::pending() const {
  std::lock_guard lock(mu_);
  if (answer_) return std::nullopt;  // answered, not yet consumed
  return pending_;
}

PendingQueryOracle::Submit PendingQueryOracle::submit(PointId id, int cls) {
  std::lock_guard lock(mu_);
  if (cls < 1 || cls > num_classes_) return Submit::kBadClass;
  if (!pending_ || *pending_ != id || answer_) return Submit::kStale;
  answer_ = cls;
  cv_.notify_all();
  return Submit::kAccepted;
}

void PendingQueryOracle::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

std::string image_bytes(const Eigen::Ref<const Vector>& pixels) {
  std::string out(static_cast<std::size_t>(pixels.size()), '\0');
  if (pixels.size() == 0) return out;
  const double lo = pixels.minCoeff();
  const double hi = pixels.maxCoeff();
  for (Eigen::Index i = 0; i < pixels.size(); ++i) {
    const double scaled = hi > lo ? (pixels[i] - lo) / (hi - lo) * 255.0 : 0.0;
    out[static_cast<std::size_t>(i)] = static_cast<char>(static_cast<unsigned char>(std::lround(scaled)));
  }
  return out;
}

OracleService::OracleService(ExperimentConfig config, Dataset data, Dataset display, std::optional<Matrix> affinity,
                             std::string static_dir)
    : config_(std::move(config)),
      data_(std::move(data)),
      display_(std::move(display)),
      affinity_(std::move(affinity)),
      static_dir_(std::move(static_dir)),
      server_(std::make_unique<httplib::Server>()),
      oracle_(config_.num_clusters, std::chrono::duration<double>(config_.oracle_timeout_s)) {
  if (display_.size() != data_.size()) throw Error(ErrorCode::kInvalidInput, "display rows differ from data rows");
  install_routes();
}

OracleService::~OracleService() { stop(); }

void OracleService::install_routes() {
  if (!static_dir_.empty()) server_->set_mount_point("/", static_dir_);

  server_->Get("/next", [this](const httplib::Request&, httplib::Response& res) {
    const auto id = oracle_.pending();
    if (!id) {
      res.status = 204;
      return;
    }
    const auto row = display_.points.row(static_cast<Eigen::Index>(*id)).transpose();
    json body;
    body["point_id"] = *id;
    json classes = json::array();
    for (int c = 1; c <= config_.num_clusters; ++c) classes.push_back(c);
    body["classes"] = classes;
    switch (display_.payload.kind) {
      case PayloadKind::kGrayscaleImage:
        body["payload_kind"] = "grayscale_image";
        body["height"] = display_.payload.height;
        body["width"] = display_.payload.width;
        body["payload"] = httplib::detail::base64_encode(image_bytes(row));
        break;
      case PayloadKind::kTrajectory:
        body["payload_kind"] = "trajectory";
        body["frames"] = display_.payload.frames;
        body["payload"] = std::vector<double>(row.data(), row.data() + row.size());
        break;
      case PayloadKind::kFeatures:
        body["payload_kind"] = "features";
        body["payload"] = std::vector<double>(row.data(), row.data() + row.size());
        break;
    }
    body["progress"] = json::parse(status_json());
    res.set_content(body.dump(), "application/json");
  });

  server_->Post("/label", [this](const httplib::Request& req, httplib::Response& res) {
    const auto reject = [&](int status, const std::string& reason) {
      res.status = status;
      res.set_content(json{{"accepted", false}, {"reason", reason}}.dump(), "application/json");
    };
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) return reject(400, "body must be a JSON object");
    if (!body.contains("point_id") || !body["point_id"].is_number_unsigned()) {
      return reject(400, "point_id must be a non-negative integer");
    }
    if (!body.contains("class") || !body["class"].is_number_integer()) return reject(400, "class must be an integer");
    const auto id = body["point_id"].get<PointId>();
    const auto cls = body["class"].get<long long>();
    if (cls < 1 || cls > config_.num_clusters) return reject(422, "class outside 1..K");
    switch (oracle_.submit(id, static_cast<int>(cls))) {
      case PendingQueryOracle::Submit::kAccepted:
        res.set_content(json{{"accepted", true}}.dump(), "application/json");
        return;
      case PendingQueryOracle::Submit::kStale:
        return reject(409, "point_id is not the pending query");
      case PendingQueryOracle::Submit::kBadClass:
        return reject(422, "class outside 1..K");
    }
  });

  server_->Get("/status", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(status_json(), "application/json");
  });
}

std::string OracleService::status_json() const {
  std::lock_guard lock(state_mu_);
  json s;
  s["queried"] = queried_;
  s["budget"] = std::min(config_.budget.value_or(data_.size()), data_.size());
  s["objective"] = objective_;
  s["done"] = done_;
  if (!error_.empty()) s["error"] = error_;
  return s.dump();
}

int OracleService::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void OracleService::start() {
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  worker_ = std::thread([this] { run_loop(); });
}

void OracleService::run_loop() {
  ExperimentHooks hooks;
  hooks.on_record = [&](const ExperimentCurve& curve) {
    std::lock_guard lock(state_mu_);
    queried_ = curve.labels.size();
    objective_ = curve.records.back().objective;
  };
  try {
    ExperimentCurve curve = run_checkpointed(config_, ExperimentInputs{data_, affinity_ ? &*affinity_ : nullptr}, oracle_, hooks);
    emit_results({curve}, config_.output);
    std::lock_guard lock(state_mu_);
    curve_ = std::move(curve);
    done_ = true;
  } catch (const std::exception& e) {
    std::lock_guard lock(state_mu_);
    error_ = e.what();
    failure_ = std::current_exception();
    done_ = true;
  }
}

ExperimentCurve OracleService::wait() {
  if (worker_.joinable()) worker_.join();
  std::lock_guard lock(state_mu_);
  if (failure_) std::rethrow_exception(failure_);
  return curve_;
}

bool OracleService::done() const {
  std::lock_guard lock(state_mu_);
  return done_;
}

void OracleService::stop() {
  oracle_.close();
  if (worker_.joinable()) worker_.join();
  if (server_) server_->stop();
  if (listener_.joinable()) listener_.join();
}

}  // namespace subal
