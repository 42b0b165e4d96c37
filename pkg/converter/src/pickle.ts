/**
 * Minimal structural pickle reader.
 *
 * Understands the opcode subset that numpy/scipy/chumpy-bearing pickles
 * use (protocols 0x02 through 0x05) and never executes anything: REDUCE
 * and NEWOBJ results become inert PyObject records, except for a small
 * set of whitelisted constructors (bytes codecs) evaluated structurally.
 */

export class PyTuple {
  constructor(public items: PyValue[]) {}
}

export class PyObject {
  cls: string;
  args: PyValue[];
  state: PyValue | null = null;
  constructor(cls: string, args: PyValue[]) {
    this.cls = cls;
    this.args = args;
  }
}

export type PyValue =
  | null
  | boolean
  | number
  | bigint
  | string
  | Uint8Array
  | PyValue[]
  | Map<PyValue, PyValue>
  | PyTuple
  | PyObject;

const MARK_SENTINEL = Symbol("mark");

function latin1ToBytes(s: string): Uint8Array {
  const out = new Uint8Array(s.length);
  for (let i = 0; i < s.length; i++) {
    const code = s.charCodeAt(i);
    if (code > 0xff) {
      throw new Error(`latin-1 payload contains code point ${code}`);
    }
    out[i] = code;
  }
  return out;
}

export function loads(data: Uint8Array): PyValue {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const decoder = new TextDecoder("utf-8", { fatal: true });
  let pos = 0;
  const stack: (PyValue | typeof MARK_SENTINEL)[] = [];
  const memo: PyValue[] = [];

  const u8 = () => data[pos++];
  const u16 = () => {
    const v = view.getUint16(pos, true);
    pos += 2;
    return v;
  };
  const u32 = () => {
    const v = view.getUint32(pos, true);
    pos += 4;
    return v;
  };
  const i32 = () => {
    const v = view.getInt32(pos, true);
    pos += 4;
    return v;
  };
  const u64 = () => {
    const v = view.getBigUint64(pos, true);
    pos += 8;
    return v;
  };
  const bytes = (n: number) => {
    const v = data.subarray(pos, pos + n);
    pos += n;
    return v;
  };
  const line = () => {
    const start = pos;
    while (data[pos] !== 0x0a) pos++;
    const s = decoder.decode(data.subarray(start, pos));
    pos++;
    return s;
  };
  const pop = (): PyValue => {
    const v = stack.pop();
    if (v === undefined || v === MARK_SENTINEL) {
      throw new Error("pickle stack underflow");
    }
    return v;
  };
  const popToMark = (): PyValue[] => {
    const items: PyValue[] = [];
    for (;;) {
      const v = stack.pop();
      if (v === undefined) throw new Error("no MARK on pickle stack");
      if (v === MARK_SENTINEL) break;
      items.push(v);
    }
    return items.reverse();
  };

  const reduce = (callable: PyValue, args: PyValue[]): PyValue => {
    if (!(callable instanceof PyObject)) {
      throw new Error("REDUCE callable is not a global reference");
    }
    const name = callable.cls;
    if (name === "_codecs encode") {
      const [payload, codec] = args;
      if (typeof payload !== "string" || (codec !== "latin1" && codec !== "latin-1")) {
        throw new Error(`unsupported _codecs.encode arguments (codec ${String(codec)})`);
      }
      return latin1ToBytes(payload);
    }
    if (name === "builtins bytes" && args.length === 0) {
      return new Uint8Array(0);
    }
    const obj = new PyObject(name, args);
    return obj;
  };

  for (;;) {
    const op = u8();
    switch (op) {
      case 0x80: // PROTO
        u8();
        break;
      case 0x95: // FRAME
        u64();
        break;
      case 0x2e: // STOP
        return pop();

      case 0x28: // MARK
        stack.push(MARK_SENTINEL);
        break;
      case 0x29: // EMPTY_TUPLE
        stack.push(new PyTuple([]));
        break;
      case 0x74: // TUPLE
        stack.push(new PyTuple(popToMark()));
        break;
      case 0x85: { // TUPLE1
        const a = pop();
        stack.push(new PyTuple([a]));
        break;
      }
      case 0x86: { // TUPLE2
        const b = pop();
        const a = pop();
        stack.push(new PyTuple([a, b]));
        break;
      }
      case 0x87: { // TUPLE3
        const c = pop();
        const b = pop();
        const a = pop();
        stack.push(new PyTuple([a, b, c]));
        break;
      }
      case 0x5d: // EMPTY_LIST
        stack.push([]);
        break;
      case 0x7d: // EMPTY_DICT
        stack.push(new Map());
        break;
      case 0x61: { // APPEND
        const v = pop();
        const list = stack[stack.length - 1];
        if (!Array.isArray(list)) throw new Error("APPEND target is not a list");
        list.push(v);
        break;
      }
      case 0x65: { // APPENDS
        const items = popToMark();
        const list = stack[stack.length - 1];
        if (!Array.isArray(list)) throw new Error("APPENDS target is not a list");
        list.push(...items);
        break;
      }
      case 0x73: { // SETITEM
        const v = pop();
        const k = pop();
        const dict = stack[stack.length - 1];
        if (!(dict instanceof Map)) throw new Error("SETITEM target is not a dict");
        dict.set(k, v);
        break;
      }
      case 0x75: { // SETITEMS
        const items = popToMark();
        const dict = stack[stack.length - 1];
        if (!(dict instanceof Map)) throw new Error("SETITEMS target is not a dict");
        for (let i = 0; i < items.length; i += 2) dict.set(items[i], items[i + 1]);
        break;
      }

      case 0x71: // BINPUT
        memo[u8()] = stack[stack.length - 1] as PyValue;
        break;
      case 0x72: // LONG_BINPUT
        memo[u32()] = stack[stack.length - 1] as PyValue;
        break;
      case 0x94: // MEMOIZE
        memo.push(stack[stack.length - 1] as PyValue);
        break;
      case 0x68: // BINGET
        stack.push(memo[u8()]);
        break;
      case 0x6a: // LONG_BINGET
        stack.push(memo[u32()]);
        break;

      case 0x4e: // NONE
        stack.push(null);
        break;
      case 0x88: // NEWTRUE
        stack.push(true);
        break;
      case 0x89: // NEWFALSE
        stack.push(false);
        break;
      case 0x4a: // BININT
        stack.push(i32());
        break;
      case 0x4b: // BININT1
        stack.push(u8());
        break;
      case 0x4d: // BININT2
        stack.push(u16());
        break;
      case 0x8a: { // LONG1
        const n = u8();
        const raw = bytes(n);
        let value = 0n;
        for (let i = n - 1; i >= 0; i--) value = (value << 8n) | BigInt(raw[i]);
        if (n > 0 && raw[n - 1] & 0x80) value -= 1n << BigInt(8 * n);
        stack.push(value <= BigInt(Number.MAX_SAFE_INTEGER) && value >= BigInt(-Number.MAX_SAFE_INTEGER) ? Number(value) : value);
        break;
      }
      case 0x47: { // BINFLOAT (big-endian f64)
        const v = view.getFloat64(pos, false);
        pos += 8;
        stack.push(v);
        break;
      }

      case 0x55: { // SHORT_BINSTRING (latin-1 in proto 2 pickles)
        const n = u8();
        stack.push(Buffer.from(bytes(n)).toString("latin1"));
        break;
      }
      case 0x54: { // BINSTRING
        const n = u32();
        stack.push(Buffer.from(bytes(n)).toString("latin1"));
        break;
      }
      case 0x58: { // BINUNICODE
        const n = u32();
        stack.push(decoder.decode(bytes(n)));
        break;
      }
      case 0x8c: { // SHORT_BINUNICODE
        const n = u8();
        stack.push(decoder.decode(bytes(n)));
        break;
      }
      case 0x8d: { // BINUNICODE8
        const n = Number(u64());
        stack.push(decoder.decode(bytes(n)));
        break;
      }
      case 0x43: { // SHORT_BINBYTES
        const n = u8();
        stack.push(new Uint8Array(bytes(n)));
        break;
      }
      case 0x42: { // BINBYTES
        const n = u32();
        stack.push(new Uint8Array(bytes(n)));
        break;
      }
      case 0x8e: { // BINBYTES8
        const n = Number(u64());
        stack.push(new Uint8Array(bytes(n)));
        break;
      }

      case 0x63: { // GLOBAL
        const module = line();
        const name = line();
        stack.push(new PyObject(`${module} ${name}`, []));
        break;
      }
      case 0x93: { // STACK_GLOBAL
        const name = pop();
        const module = pop();
        stack.push(new PyObject(`${module} ${name}`, []));
        break;
      }
      case 0x52: { // REDUCE
        const argTuple = pop();
        const callable = pop();
        const args = argTuple instanceof PyTuple ? argTuple.items : [argTuple];
        stack.push(reduce(callable, args));
        break;
      }
      case 0x81: { // NEWOBJ
        const argTuple = pop();
        const cls = pop();
        if (!(cls instanceof PyObject)) throw new Error("NEWOBJ class is not a global");
        const args = argTuple instanceof PyTuple ? argTuple.items : [];
        stack.push(new PyObject(cls.cls, args));
        break;
      }
      case 0x62: { // BUILD
        const state = pop();
        const obj = stack[stack.length - 1];
        if (!(obj instanceof PyObject)) throw new Error("BUILD target is not an object");
        obj.state = state;
        break;
      }

      default:
        throw new Error(
          `unsupported pickle opcode 0x${op.toString(16)} at offset ${pos - 1}`
        );
    }
  }
}
