#include <oprisk/warnings.hpp>

#include <iostream>
#include <mutex>

namespace oprisk {

namespace {

std::mutex g_mutex;

WarningHandler& handler() {
    static WarningHandler h = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return h;
}

WarningHandler exchange(WarningHandler next) {
    std::lock_guard lock(g_mutex);
    WarningHandler prev = std::move(handler());
    handler() = std::move(next);
    return prev;
}

} // namespace

void set_warning_handler(WarningHandler h) { exchange(std::move(h)); }

void warn(const std::string& message) {
    std::lock_guard lock(g_mutex);
    if (handler()) handler()(message);
}

WarningCapture::WarningCapture() {
    previous_ = exchange([this](std::string_view msg) { messages_.emplace_back(msg); });
}

WarningCapture::~WarningCapture() { exchange(std::move(previous_)); }

} // namespace oprisk
