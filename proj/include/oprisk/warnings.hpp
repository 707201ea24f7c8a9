#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace oprisk {

// Non-fatal diagnostics (clamped lookups, degenerate frequencies, low-quality studies).
// The default handler writes "warning: <msg>" to stderr; tools may collect them instead.
using WarningHandler = std::function<void(std::string_view)>;

void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

// Collects warnings emitted while alive, then restores the previous handler.
class WarningCapture {
public:
    WarningCapture();
    ~WarningCapture();
    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;

    const std::vector<std::string>& messages() const noexcept { return messages_; }

private:
    WarningHandler previous_;
    std::vector<std::string> messages_;
};

} // namespace oprisk
