import { mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';

export const HEADER =
  'policy,k,dist,rho,eps,n,sigma,seed,num_arrivals,mean_t,time_avg_n,improvement_ratio,ci_halfwidth';

/** A small sweep CSV shaped like the simulator's fig4 output. */
export const SWEEP_CSV = [
  HEADER,
  'srpt,2,exp:rate=1,0.94,,,,1,1000,4.51,4.24,0,',
  'srpt,2,exp:rate=1,0.94,,,,,1000,4.51,4.24,0,0',
  'sek:eps=1,2,exp:rate=1,0.94,1,,,1,1000,4.49,4.22,0.0027,',
  'sek:eps=1,2,exp:rate=1,0.94,1,,,,1000,4.49,4.22,0.0027,0.0004',
  'sek:eps=1,2,exp:rate=1,0.95,1,,,,1000,5.1,4.85,0.0032,0.0003',
  'sek:eps=1,2,exp:rate=1,0.96,1,,,,1000,5.9,5.67,0.0031,0.0005',
  'srpt,2,exp:rate=1,0.95,,,,,1000,5.12,4.86,0,0',
  'srpt,2,exp:rate=1,0.96,,,,,1000,5.92,5.69,0,0',
].join('\n') + '\n';

/** Hyperexponential grid rows with quoted dist specs, including a tie. */
export const TABLE3_CSV = [
  HEADER,
  '"sek:eps=1",2,"hyperexp:csq=2,rho_high=0.1,mean=1",0.97,1,,,,1000,9.1,8.8,0.0048,0.0002',
  '"sek:eps=2",2,"hyperexp:csq=2,rho_high=0.1,mean=1",0.97,2,,,,1000,9.2,8.9,0.0041,0.0002',
  '"sek:eps=3",2,"hyperexp:csq=20,rho_high=0.3,mean=1",0.98,3,,,,1000,14.0,13.7,0.009,0.0003',
  '"sek:eps=1",2,"hyperexp:csq=20,rho_high=0.3,mean=1",0.9,1,,,,1000,9.9,8.9,0.009,0.0003',
  '"sek:eps=1.5",2,"hyperexp:csq=4,rho_high=0.5,mean=1",0.96,1.5,,,,1000,8.0,7.7,0.0063,0.0002',
].join('\n') + '\n';

export function writeTmp(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), 'plots-'));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}
