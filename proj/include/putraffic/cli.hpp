#pragma once

namespace putraffic {

int cli_main(int argc, char **argv);

} // namespace putraffic
