#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "putraffic/traffic.hpp"

namespace putraffic {

// Line-oriented text formats shared by the CLI tools.
//
//   # putraffic trajectory
//   # horizon=100 lambda_f=0.9 lambda_n=2.1 seed=7 u=0.3
//   time,state
//   0,1               <- initial state at t = 0
//   0.8731,0          <- one line per switch, new state
//
//   # putraffic stream
//   # lambda_f=0.9 seed=7 sensed=0 ...
//   t_n,z_n
//   0,1
//   0.5,1
//
// Header values are free-form key=value pairs; readers return them as-is.
using FileHeader = std::map<std::string, std::string>;

void write_trajectory(std::ostream &os, const Trajectory &traj, const FileHeader &header = {});
Trajectory read_trajectory(std::istream &is, FileHeader *header = nullptr);

void write_stream(std::ostream &os, const SampleStream &stream, const FileHeader &header = {});
// The schedule is rebuilt from successive time differences. A `sensed=1`
// header entry marks the stream as sensed.
SampleStream read_stream(std::istream &is, FileHeader *header = nullptr);

FileHeader params_header(const TrafficParams &p);

} // namespace putraffic
