#include <stdexcept>
#include <thread>

#include "chanaudit/collector.hpp"

namespace chanaudit {

void FetchPolicy::validate() const {
  if (max_concurrent_requests < 1) throw std::invalid_argument("max_concurrent_requests must be at least 1");
  if (min_inter_request_delay <= Millis::zero()) throw std::invalid_argument("min_inter_request_delay must be > 0");
  if (page_settle_delay <= Millis::zero()) throw std::invalid_argument("page_settle_delay must be > 0");
  if (retries < 0) throw std::invalid_argument("retries must be non-negative");
}

RateLimiter::RateLimiter(FetchPolicy policy, Millis slack) : policy_(policy), slack_(slack) { policy_.validate(); }

RateLimiter::Permit RateLimiter::acquire(const std::string& host) {
  std::unique_lock lk(mu_);
  auto& h = hosts_[host];
  cv_.wait(lk, [&] { return h.in_flight < policy_.max_concurrent_requests; });
  ++h.in_flight;
  int seen = max_in_flight_.load();
  while (h.in_flight > seen && !max_in_flight_.compare_exchange_weak(seen, h.in_flight)) {
  }
  // Start time is claimed under the lock.
  while (true) {
    const auto now = Clock::now();
    if (!h.last_start || now >= *h.last_start + policy_.min_inter_request_delay + slack_) {
      h.last_start = now;
      break;
    }
    cv_.wait_until(lk, *h.last_start + policy_.min_inter_request_delay + slack_);
  }
  return Permit(this, host);
}

void RateLimiter::release(const std::string& host) {
  {
    std::lock_guard lk(mu_);
    --hosts_[host].in_flight;
  }
  cv_.notify_all();
}

RateLimiter::Permit::Permit(Permit&& other) noexcept : owner_(other.owner_), host_(std::move(other.host_)) {
  other.owner_ = nullptr;
}

RateLimiter::Permit& RateLimiter::Permit::operator=(Permit&& other) noexcept {
  if (this != &other) {
    release();
    owner_ = other.owner_;
    host_ = std::move(other.host_);
    other.owner_ = nullptr;
  }
  return *this;
}

RateLimiter::Permit::~Permit() { release(); }

void RateLimiter::Permit::release() {
  if (owner_) owner_->release(host_);
  owner_ = nullptr;
}

}  // namespace chanaudit
