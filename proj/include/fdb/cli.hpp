#pragma once

namespace fdb::cli {

// Exit codes: 0 ok, 1 oracle or check failure, 2 usage, 3 missing
// prerequisite, 4 incompatible artifacts.
int run(int argc, char** argv);

}  // namespace fdb::cli
