export { Dims4, Payload, LcntError, encodeTensor, decodeTensor, elementCount, HEADER_SIZE } from "./lcnt.js";
export { StatusCode, statusFromCli } from "./status.js";
export {
  BackwardOptions,
  BackwardResult,
  FamilyNorm,
  FamilyOptions,
  ForwardResult,
  LcnOptions,
  Mode,
  familyForward,
  lcnBackward,
  lcnForward,
} from "./binding.js";
