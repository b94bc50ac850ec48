#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace predmon::alerts {

/// One alert raised while monitoring. team/severity come from the band of the
/// chosen action in the governing threshold table.
struct AlertEvent {
    std::int64_t timestamp = 0;
    std::string channel;
    double value = 0.0;
    int action = 0;
    std::string team;
    int severity = 0;
    int episode = 0;
    int step = 0;
};

std::string to_json_line(const AlertEvent& event);

struct SinkResult {
    std::string sink;
    bool delivered = false;
    int attempts = 0;
    std::string error;
};

/// Delivery target. deliver() throws on failure; dispatch_alert handles the
/// retry budget. Implementations must tolerate concurrent calls from
/// multiple agent loops.
class AlertSink {
public:
    virtual ~AlertSink() = default;
    virtual std::string name() const = 0;
    virtual void deliver(const AlertEvent& event) = 0;
};

class StdoutSink final : public AlertSink {
public:
    std::string name() const override { return "stdout"; }
    void deliver(const AlertEvent& event) override;

private:
    std::mutex mutex_;
};

/// Appends one JSON line per event; writes are serialized internally.
class FileSink final : public AlertSink {
public:
    explicit FileSink(std::filesystem::path path) : path_(std::move(path)) {}
    std::string name() const override { return "file:" + path_.string(); }
    void deliver(const AlertEvent& event) override;

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

/// POSTs the JSON event to an http:// URL. Non-2xx responses and transport
/// errors count as failures.
class WebhookSink final : public AlertSink {
public:
    explicit WebhookSink(std::string url);
    std::string name() const override { return "webhook:" + url_; }
    void deliver(const AlertEvent& event) override;

private:
    std::string url_;
    std::string host_;
    int port_ = 80;
    std::string path_;
};

/// Deliver an event to every sink. Severity-0 events are suppressed (no
/// deliveries, empty result). Each sink gets up to `max_attempts` tries
/// (default: initial attempt plus two retries); a sink that still fails is
/// recorded as failed and never aborts the caller.
std::vector<SinkResult> dispatch_alert(const AlertEvent& event,
                                       const std::vector<std::shared_ptr<AlertSink>>& sinks,
                                       int max_attempts = 3);

}  // namespace predmon::alerts
