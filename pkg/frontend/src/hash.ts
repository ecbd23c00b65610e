import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import { basename } from "node:path";
import { InputError } from "./csv.js";

export interface InputStamp {
    file: string;
    sha256: string;
}

/** Content stamp recorded in the image metadata: the renderer reads, never computes. */
export function stampInput(path: string): InputStamp {
    let buf: Buffer;
    try {
        buf = readFileSync(path);
    } catch {
        throw new InputError(path, "cannot read file");
    }
    return { file: basename(path), sha256: createHash("sha256").update(buf).digest("hex") };
}
