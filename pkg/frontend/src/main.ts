#!/usr/bin/env node
import { runFromProcessArgv } from "./cli.js";

runFromProcessArgv();
