#include "predmon/alerts.hpp"

#include <fstream>
#include <iostream>

#include <httplib.h>
#include <json.hpp>

#include "predmon/errors.hpp"

namespace predmon::alerts {

using nlohmann::json;

std::string to_json_line(const AlertEvent& event) {
    json j = {{"timestamp", event.timestamp}, {"channel", event.channel},
              {"value", event.value},         {"action", event.action},
              {"team", event.team},           {"severity", event.severity},
              {"episode", event.episode},     {"step", event.step}};
    return j.dump();
}

void StdoutSink::deliver(const AlertEvent& event) {
    std::lock_guard lock(mutex_);
    std::cout << to_json_line(event) << '\n';
    std::cout.flush();
}

void FileSink::deliver(const AlertEvent& event) {
    std::lock_guard lock(mutex_);
    std::ofstream file(path_, std::ios::app);
    if (!file) throw IoError("cannot append to alert file '" + path_.string() + "'");
    file << to_json_line(event) << '\n';
    if (!file) throw IoError("short write to alert file '" + path_.string() + "'");
}

WebhookSink::WebhookSink(std::string url) : url_(std::move(url)) {
    // Accepts http://host[:port][/path]; anything else is a config error.
    const std::string prefix = "http://";
    if (url_.rfind(prefix, 0) != 0)
        throw ConfigError("webhook URL must start with http://, got '" + url_ + "'");
    std::string rest = url_.substr(prefix.size());
    const auto slash = rest.find('/');
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    const auto colon = hostport.find(':');
    if (colon == std::string::npos) {
        host_ = hostport;
    } else {
        host_ = hostport.substr(0, colon);
        try {
            port_ = std::stoi(hostport.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("webhook URL has a malformed port: '" + url_ + "'");
        }
    }
    if (host_.empty()) throw ConfigError("webhook URL has no host: '" + url_ + "'");
}

void WebhookSink::deliver(const AlertEvent& event) {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(2, 0);
    client.set_read_timeout(5, 0);
    const auto response = client.Post(path_, to_json_line(event), "application/json");
    if (!response)
        throw IoError("webhook '" + url_ + "' unreachable");
    if (response->status < 200 || response->status >= 300)
        throw IoError("webhook '" + url_ + "' returned status " +
                      std::to_string(response->status));
}

std::vector<SinkResult> dispatch_alert(const AlertEvent& event,
                                       const std::vector<std::shared_ptr<AlertSink>>& sinks,
                                       int max_attempts) {
    std::vector<SinkResult> results;
    if (event.severity == 0) return results;  // no-alert band

    results.reserve(sinks.size());
    for (const auto& sink : sinks) {
        SinkResult result;
        result.sink = sink->name();
        for (int attempt = 1; attempt <= max_attempts; ++attempt) {
            result.attempts = attempt;
            try {
                sink->deliver(event);
                result.delivered = true;
                result.error.clear();
                break;
            } catch (const std::exception& e) {
                result.error = e.what();
            }
        }
        results.push_back(std::move(result));
    }
    return results;
}

}  // namespace predmon::alerts
